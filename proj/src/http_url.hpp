#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace colloquy::detail {

/// "https://host:port/prefix" -> {"https://host:port", "/prefix"}.
struct SplitUrl {
    std::string origin;
    std::string path_prefix;
};

inline SplitUrl split_base_url(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw std::invalid_argument("base URL needs a scheme: " + std::string(url));
    }
    auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    if (path_start == std::string_view::npos) {
        out.origin = std::string(url);
    } else {
        out.origin = std::string(url.substr(0, path_start));
        out.path_prefix = std::string(url.substr(path_start));
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    }
    return out;
}

}  // namespace colloquy::detail
