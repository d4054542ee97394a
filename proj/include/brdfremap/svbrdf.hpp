#pragma once

// Spatially-varying materials as texture maps, per-texel remapping through a
// fitted transform, and plane previews for checking the result.

#include <filesystem>

#include "brdfremap/image_io.hpp"
#include "brdfremap/spec_text.hpp"
#include "brdfremap/xform.hpp"

namespace brdfremap {

// Maps share one resolution and are stored row-major, top row first.
// Colour maps are linear; normals keep their [0, 1] encoding (n = 2c - 1).
struct SvbrdfMaps {
    ModelFamily model = ModelFamily::GGX;
    int width = 0;
    int height = 0;
    std::vector<Rgb> diffuse;
    std::vector<Rgb> specular;
    std::vector<double> roughness;
    std::vector<Rgb> normals;

    std::size_t texels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

    static SvbrdfMaps uniform(ModelFamily model, int w, int h, const MaterialParams& p) {
        const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
        return {model, w, h, std::vector<Rgb>(n, p.diffuse), std::vector<Rgb>(n, p.specular),
                std::vector<double>(n, p.roughness), std::vector<Rgb>(n, Rgb(0.5, 0.5, 1.0))};
    }

    MaterialParams texel(std::size_t i) const { return {diffuse[i], specular[i], roughness[i]}; }

    void validate() const {
        if (width <= 0 || height <= 0) throw DimensionError("map size must be positive");
        const auto n = texels();
        if (diffuse.size() != n || specular.size() != n || roughness.size() != n || normals.size() != n)
            throw DimensionError("maps must share one resolution");
    }
};

inline Vec3 decode_normal(const Rgb& c) { return normalize(Vec3{2 * c.r - 1, 2 * c.g - 1, 2 * c.b - 1}); }

struct RemapStats {
    std::size_t texels = 0;
    std::size_t clamped_roughness = 0;
    std::size_t clamped_specular = 0;
    std::size_t clamped_diffuse = 0;
    std::size_t out_of_domain = 0;

    std::size_t clamped() const { return clamped_roughness + clamped_specular + clamped_diffuse; }
};

namespace detail {

inline ModelFamily source_of(const TransformModel& t) { return t.source_model; }
inline ModelFamily target_of(const TransformModel& t) { return t.target_model; }
inline ModelFamily source_of(const ChainedTransform& t) { return t.source_model(); }
inline ModelFamily target_of(const ChainedTransform& t) { return t.target_model(); }

}  // namespace detail

// Per-texel application of a transform. Values outside the target's
// bounds are clamped and counted; normals are copied unchanged.
template <typename Transform>
SvbrdfMaps remap_maps(const SvbrdfMaps& m, const Transform& t, RemapStats* stats = nullptr, unsigned threads = 1) {
    m.validate();
    if (m.model != detail::source_of(t))
        throw ConfigError("maps are " + std::string(model_name(m.model)) + ", transform expects " +
                          std::string(model_name(detail::source_of(t))));
    const ModelFamily target = detail::target_of(t);
    const double spec_max = uses_fresnel(target) ? 1.0 : kInf;

    SvbrdfMaps out{target, m.width, m.height, {}, {}, {}, m.normals};
    const std::size_t n = m.texels();
    out.diffuse.resize(n);
    out.specular.resize(n);
    out.roughness.resize(n);
    std::vector<unsigned char> marks(n);

    parallel_for(static_cast<std::size_t>(m.height), threads, [&](std::size_t row) {
        const std::size_t w = static_cast<std::size_t>(m.width);
        for (std::size_t i = row * w; i < (row + 1) * w; ++i) {
            ApplyDiagnostic diag;
            auto p = t.apply(m.texel(i), &diag);
            unsigned char mark = diag.roughness_clamped ? 1 : 0;
            if (diag.out_of_domain) mark |= 8;
            for (int c = 0; c < 3; ++c) {
                const double s = std::clamp(p.specular[c], 0.0, spec_max);
                if (s != p.specular[c]) mark |= 2;
                p.specular[c] = s;
                if (p.diffuse[c] < 0) {
                    p.diffuse[c] = 0;
                    mark |= 4;
                }
            }
            out.diffuse[i] = p.diffuse;
            out.specular[i] = p.specular;
            out.roughness[i] = p.roughness;
            marks[i] = mark;
        }
    });

    if (stats) {
        *stats = {};
        stats->texels = n;
        for (auto mk : marks) {
            stats->clamped_roughness += mk & 1 ? 1 : 0;
            stats->clamped_specular += mk & 2 ? 1 : 0;
            stats->clamped_diffuse += mk & 4 ? 1 : 0;
            stats->out_of_domain += mk & 8 ? 1 : 0;
        }
    }
    return out;
}

// Sampled alpha1 -> alpha2 curve: x_i = max(i / 255, 1e-3).
struct ToneCurve {
    std::vector<double> x, y;

    double lookup(double a) const {
        if (a <= x.front()) return y.front();
        if (a >= x.back()) return y.back();
        const auto it = std::upper_bound(x.begin(), x.end(), a);
        const auto i = static_cast<std::size_t>(it - x.begin());
        const double t = (a - x[i - 1]) / (x[i] - x[i - 1]);
        return y[i - 1] + t * (y[i] - y[i - 1]);
    }
};

template <typename Transform>
ToneCurve tonemap_curve(const Transform& t) {
    ToneCurve c;
    for (int i = 0; i < 256; ++i) {
        c.x.push_back(std::max(i / 255.0, kRoughnessMin));
        c.y.push_back(t.roughness(c.x.back()));
    }
    return c;
}

// Per-texel shading of the preview plane, one pixel per texel, with the
// decoded normal as shading normal.
inline RenderedImage preview_render(const SvbrdfMaps& m, const PlaneScene& scene_in,
                                    RenderPass pass = RenderPass::Full, unsigned threads = 0) {
    m.validate();
    PlaneScene scene = scene_in;
    scene.width = m.width;
    scene.height = m.height;
    scene.validate();
    const CameraFrame cam = plane_camera(scene);
    const Vec3 light_pos = light_position(scene.light, cam, {0, 0, 0});
    auto img = RenderedImage::zeros(m.width, m.height, pass);
    parallel_for(static_cast<std::size_t>(m.height), threads, [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < m.width; ++x) {
            const std::size_t i = row * static_cast<std::size_t>(m.width) + static_cast<std::size_t>(x);
            const ShadingParams p{m.model, m.diffuse[i], m.specular[i], m.roughness[i]};
            img.set(x, y, shade_point(p, plane_point(x, y, m.width, m.height), decode_normal(m.normals[i]),
                                      cam.origin, light_pos, scene.light.intensity, pass));
        }
    });
    return img;
}

// --- Material folders ------------------------------------------------------------
//
// A folder holds one manifest, `material.txt`, of key = value lines:
//
//   model = WardA
//   diffuse = diffuse.png
//   diffuse.transfer = srgb        # srgb | linear, PNG colour maps only
//   specular = specular.png
//   specular.transfer = srgb
//   roughness = roughness.pfm
//   normals = normals.png
//
// Map files are PNG (8 or 16 bit) or PFM, chosen by extension.

inline constexpr const char* kManifestName = "material.txt";

struct MaterialManifest {
    ModelFamily model = ModelFamily::GGX;
    std::map<std::string, std::string> files;  // diffuse, specular, roughness, normals
    Transfer diffuse_transfer = Transfer::Srgb;
    Transfer specular_transfer = Transfer::Srgb;
};

inline Transfer parse_transfer(std::string_view s, int line) {
    if (s == "srgb") return Transfer::Srgb;
    if (s == "linear") return Transfer::Linear;
    throw ParseError("transfer must be srgb or linear, got '" + std::string(s) + "'", line);
}

inline MaterialManifest parse_manifest(const std::string& text) {
    MaterialManifest m;
    bool have_model = false;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto body = std::string_view(raw).substr(0, raw.find('#'));
        body = detail::trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected key = value", line);
        const auto key = detail::trim(body.substr(0, eq));
        const auto value = std::string(detail::trim(body.substr(eq + 1)));
        if (key == "model") {
            const auto mdl = find_model(value);
            if (!mdl) throw ParseError("unknown model '" + value + "'", line);
            m.model = *mdl;
            have_model = true;
        } else if (key == "diffuse" || key == "specular" || key == "roughness" || key == "normals") {
            m.files[std::string(key)] = value;
        } else if (key == "diffuse.transfer") {
            m.diffuse_transfer = parse_transfer(value, line);
        } else if (key == "specular.transfer") {
            m.specular_transfer = parse_transfer(value, line);
        } else {
            throw ParseError("unknown manifest key '" + std::string(key) + "'", line);
        }
    }
    if (!have_model) throw ParseError("manifest does not name a model");
    for (auto k : {"diffuse", "specular", "roughness", "normals"})
        if (!m.files.count(k)) throw ParseError(std::string("manifest is missing '") + k + "'");
    return m;
}

namespace detail {

struct LoadedMap {
    int w = 0, h = 0;
    std::vector<Rgb> rgb;
};

inline bool has_extension(const std::string& path, const char* ext) {
    auto e = std::filesystem::path(path).extension().string();
    for (auto& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return e == ext;
}

inline LoadedMap load_map(const std::string& path, Transfer transfer) {
    LoadedMap out;
    if (has_extension(path, ".pfm")) {
        const auto r = read_pfm(path);
        out.w = r.width;
        out.h = r.height;
        for (std::size_t i = 0; i < static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height); ++i) {
            if (r.channels == 1)
                out.rgb.emplace_back(r.data[i]);
            else
                out.rgb.emplace_back(r.data[3 * i], r.data[3 * i + 1], r.data[3 * i + 2]);
        }
        return out;
    }
    if (!has_extension(path, ".png")) throw IoError("unsupported map format: " + path);
    const auto d = read_png(path);
    out.w = d.width;
    out.h = d.height;
    const double maxval = d.bit_depth == 16 ? 65535.0 : 255.0;
    auto decode = [&](std::uint16_t v) {
        const double x = v / maxval;
        return transfer == Transfer::Srgb ? srgb_decode(x) : x;
    };
    const std::size_t n = static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.height);
    for (std::size_t i = 0; i < n; ++i) {
        const auto* s = &d.samples[i * static_cast<std::size_t>(d.channels)];
        if (d.channels < 3)
            out.rgb.emplace_back(decode(s[0]));
        else
            out.rgb.emplace_back(decode(s[0]), decode(s[1]), decode(s[2]));
    }
    return out;
}

}  // namespace detail

inline SvbrdfMaps load_material(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto manifest_path = fs::path(dir) / kManifestName;
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const auto man = parse_manifest(ss.str());
    auto path = [&](const char* key) { return (fs::path(dir) / man.files.at(key)).string(); };

    const auto diffuse = detail::load_map(path("diffuse"), man.diffuse_transfer);
    const auto specular = detail::load_map(path("specular"), man.specular_transfer);
    const auto rough = detail::load_map(path("roughness"), Transfer::Linear);
    const auto normals = detail::load_map(path("normals"), Transfer::Linear);
    for (const auto* m : {&specular, &rough, &normals})
        if (m->w != diffuse.w || m->h != diffuse.h) throw DimensionError("maps in " + dir + " differ in resolution");

    SvbrdfMaps maps{man.model, diffuse.w, diffuse.h, diffuse.rgb, specular.rgb, {}, normals.rgb};
    for (const auto& c : rough.rgb) {
        if (!(c.r > 0 && c.r <= 1)) throw DomainError("roughness texel outside (0, 1] in " + path("roughness"));
        maps.roughness.push_back(c.r);
    }
    return maps;
}

// Writes a folder mirroring the input: PFM colour and roughness maps, the
// normals file copied byte for byte, and a manifest naming the new model.
inline void save_material(const std::string& dir, const SvbrdfMaps& m, const std::string& normals_source = {}) {
    namespace fs = std::filesystem;
    m.validate();
    fs::create_directories(dir);
    auto raster = [&](auto get, int channels) {
        FloatRaster r{m.width, m.height, channels, {}};
        for (std::size_t i = 0; i < m.texels(); ++i) get(i, r.data);
        return r;
    };
    write_pfm((fs::path(dir) / "diffuse.pfm").string(), raster([&](std::size_t i, std::vector<float>& d) {
                  for (int c = 0; c < 3; ++c) d.push_back(static_cast<float>(m.diffuse[i][c]));
              }, 3));
    write_pfm((fs::path(dir) / "specular.pfm").string(), raster([&](std::size_t i, std::vector<float>& d) {
                  for (int c = 0; c < 3; ++c) d.push_back(static_cast<float>(m.specular[i][c]));
              }, 3));
    write_pfm((fs::path(dir) / "roughness.pfm").string(), raster([&](std::size_t i, std::vector<float>& d) {
                  d.push_back(static_cast<float>(m.roughness[i]));
              }, 1));
    std::string normals_name = "normals.pfm";
    if (!normals_source.empty()) {
        normals_name = fs::path(normals_source).filename().string();
        fs::copy_file(normals_source, fs::path(dir) / normals_name, fs::copy_options::overwrite_existing);
    } else {
        write_pfm((fs::path(dir) / normals_name).string(), raster([&](std::size_t i, std::vector<float>& d) {
                      for (int c = 0; c < 3; ++c) d.push_back(static_cast<float>(m.normals[i][c]));
                  }, 3));
    }
    csv::write_file((fs::path(dir) / kManifestName).string(),
                    "model = " + std::string(model_name(m.model)) +
                        "\ndiffuse = diffuse.pfm\nspecular = specular.pfm\nroughness = roughness.pfm\nnormals = " +
                        normals_name + "\n");
}

inline std::string manifest_normals_path(const std::string& dir) {
    std::ifstream in(std::filesystem::path(dir) / kManifestName);
    std::stringstream ss;
    ss << in.rdbuf();
    return (std::filesystem::path(dir) / parse_manifest(ss.str()).files.at("normals")).string();
}

}  // namespace brdfremap
