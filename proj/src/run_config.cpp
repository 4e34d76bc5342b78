#include "colloquy/run_config.hpp"

#include <stdexcept>

#include "colloquy/structured_text.hpp"

namespace colloquy {

RunConfig load_run_config(const std::filesystem::path& path, persona::ValidationMode mode) {
    const auto doc = read_structured_file(path.string());
    if (!doc.is_object()) throw std::invalid_argument(path.string() + ": run configuration must be a mapping");
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path candidate(p);
        return candidate.is_absolute() ? candidate : base / candidate;
    };

    RunConfig rc;
    auto files = doc.find("persona_files");
    if (files == doc.end() || !files->is_array()) {
        throw std::invalid_argument(path.string() + ": persona_files must list persona sheets");
    }
    for (const auto& f : *files) {
        auto file = resolve(f.get<std::string>());
        rc.personas.push_back(persona::validate_persona(persona::read_persona_file(file.string()), mode));
    }

    auto debate = doc.find("debate");
    if (debate == doc.end()) throw std::invalid_argument(path.string() + ": missing 'debate' section");
    rc.debate = debate_config_from_json(*debate);

    if (auto k = doc.find("keywords_file"); k != doc.end() && k->is_string()) {
        rc.keywords = analysis::read_keywords_file(resolve(k->get<std::string>()).string());
    }
    if (auto o = doc.find("output_dir"); o != doc.end() && o->is_string()) {
        rc.output_dir = resolve(o->get<std::string>());
    }
    if (auto p = doc.find("provider"); p != doc.end() && p->is_object()) {
        if (auto u = p->find("base_url"); u != p->end() && u->is_string()) rc.base_url = u->get<std::string>();
    }
    return rc;
}

}  // namespace colloquy
