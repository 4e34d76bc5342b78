#include "colloquy/structured_text.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

namespace colloquy {
namespace {

nlohmann::json scalar_to_json(const YAML::Node& node) {
    const std::string& s = node.Scalar();
    if (node.Tag() == "!") return s;  // quoted

    if (s == "true" || s == "True" || s == "TRUE") return true;
    if (s == "false" || s == "False" || s == "FALSE") return false;
    if (s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;

    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;

    long long integer = 0;
    if (auto [p, ec] = std::from_chars(first, last, integer); ec == std::errc{} && p == last) {
        return integer;
    }
    double real = 0;
    if (auto [p, ec] = std::from_chars(first, last, real); ec == std::errc{} && p == last) {
        return real;
    }
    return s;
}

nlohmann::json node_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Scalar:
            return scalar_to_json(node);
        case YAML::NodeType::Sequence: {
            auto arr = nlohmann::json::array();
            for (const auto& item : node) arr.push_back(node_to_json(item));
            return arr;
        }
        case YAML::NodeType::Map: {
            auto obj = nlohmann::json::object();
            for (const auto& kv : node) {
                auto key = kv.first.as<std::string>();
                if (obj.contains(key)) {
                    throw std::runtime_error("duplicate key '" + key + "'");
                }
                obj[key] = node_to_json(kv.second);
            }
            return obj;
        }
    }
    return nullptr;
}

}  // namespace

nlohmann::json parse_structured_text(std::string_view text) {
    try {
        return node_to_json(YAML::Load(std::string(text)));
    } catch (const YAML::Exception& e) {
        throw std::runtime_error(std::string("malformed document: ") + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_structured_file(const std::string& path) {
    return parse_structured_text(read_text_file(path));
}

}  // namespace colloquy
