#pragma once

// Key-value text form of a BrdfSpec.
//
//   # comment
//   model = GGX
//   diffuse.r = 0.2
//   specular.r = 0.04
//   roughness = 0.3
//
// The first non-comment line must name the model. Remaining lines set
// parameters; omitted parameters keep the model defaults. The specular
// parameterization is inferred: an `ior` key selects a real IOR, any
// `eta.*` or `k.*` key selects a complex IOR, otherwise `specular.*` (F0).

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "brdfremap/brdf.hpp"

namespace brdfremap {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view text, int line) {
    double v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParseError("invalid number '" + std::string(text) + "'", line);
    return v;
}

}  // namespace detail

inline BrdfSpec parse_spec(std::string_view text) {
    struct Entry {
        double value;
        int line;
    };
    std::optional<ModelFamily> model;
    std::map<std::string, Entry, std::less<>> entries;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'name = value'", line_no);
        const auto key = detail::trim(line.substr(0, eq));
        const auto val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) throw ParseError("expected 'name = value'", line_no);

        if (!model) {
            if (key != "model") throw ParseError("first entry must be 'model = <name>'", line_no);
            model = find_model(val);
            if (!model) throw ParseError("unknown BRDF model '" + std::string(val) + "'", line_no);
            continue;
        }
        if (key == "model") throw ParseError("duplicate model line", line_no);
        if (entries.contains(key)) throw ParseError("duplicate parameter '" + std::string(key) + "'", line_no);
        entries.emplace(std::string(key), Entry{detail::parse_double(val, line_no), line_no});
    }
    if (!model) throw ParseError("missing 'model = <name>' line", line_no);

    SpecularParam sp = SpecularParam::F0;
    for (const auto& [k, e] : entries) {
        if (k == kIorName) sp = SpecularParam::RealIor;
        if (k.starts_with("eta.") || k.starts_with("k.")) sp = SpecularParam::ComplexIor;
    }
    auto spec = BrdfSpec::make(*model, sp);
    for (const auto& [k, e] : entries) {
        const auto idx = spec.index_of(k);
        if (!idx) throw ParseError("model " + std::string(model_name(*model)) + " has no parameter '" + k + "'", e.line);
        const auto& p = spec.params()[*idx];
        if (!std::isfinite(e.value) || e.value < p.lower || e.value > p.upper)
            throw ParseError("parameter '" + k + "' = " + std::to_string(e.value) + " outside [" +
                                 std::to_string(p.lower) + ", " + std::to_string(p.upper) + "]",
                             e.line);
        spec.set(k, e.value);
    }
    spec.validate();
    return spec;
}

inline std::string format_spec(const BrdfSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    os << "model = " << model_name(spec.model()) << '\n';
    for (const auto& p : spec.params()) os << p.name << " = " << p.value << '\n';
    return os.str();
}

inline BrdfSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open spec file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

inline void save_spec(const BrdfSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write spec file '" + path + "'");
    out << format_spec(spec);
}

}  // namespace brdfremap
