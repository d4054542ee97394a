// brdfremap: command-line front end.
//
// Every subcommand writes into an output directory that also receives the
// resolved configuration (config.toml); `brdfremap --config <dir>/config.toml`
// reruns the same command. Errors go to stderr as a single line
//   BRDFREMAP_ERROR <category> <message>
// and map onto exit codes: 1 stability flags raised, 2 usage/parse,
// 3 config/io, 4 domain/dimension, 5 numeric.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "brdfremap/svbrdf.hpp"

namespace fs = std::filesystem;
using namespace brdfremap;

namespace {

constexpr int kExitFlags = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitDomain = 4;
constexpr int kExitNumeric = 5;

int exit_code(const Error& e) {
    const std::string_view c = e.category();
    if (c == "parse") return kExitUsage;
    if (c == "config" || c == "io") return kExitConfig;
    if (c == "domain" || c == "dimension") return kExitDomain;
    return kExitNumeric;
}

void report_error(std::string_view category, std::string message) {
    for (char& ch : message)
        if (ch == '\n') ch = ' ';
    std::cerr << "BRDFREMAP_ERROR " << category << ' ' << message << '\n';
}

// Files are written to a sibling staging directory and moved into place
// only once everything succeeded, so a failing command leaves no partial
// outputs behind.
class Staging {
public:
    explicit Staging(std::string out) : out_(std::move(out)) {
        if (out_.empty()) throw ConfigError("--out is required");
        tmp_ = fs::path(out_ + ".partial");
        fs::remove_all(tmp_);
        fs::create_directories(tmp_);
    }
    Staging(const Staging&) = delete;
    Staging& operator=(const Staging&) = delete;
    ~Staging() {
        std::error_code ec;
        fs::remove_all(tmp_, ec);
    }

    std::string path(const std::string& name) const { return (tmp_ / name).string(); }
    std::string dir() const { return tmp_.string(); }

    void commit() {
        fs::create_directories(out_);
        for (const auto& entry : fs::directory_iterator(tmp_))
            fs::rename(entry.path(), fs::path(out_) / entry.path().filename());
    }

private:
    std::string out_;
    fs::path tmp_;
};

LightConfig parse_light(const std::string& text) {
    if (text == "headlight") return LightConfig::headlight();
    if (text.rfind("oblique:", 0) == 0) {
        const auto light = LightConfig::oblique(csv::parse_double(text.substr(8), 0));
        light.validate();
        return light;
    }
    throw ConfigError("light must be 'headlight' or 'oblique:<degrees>', got '" + text + "'");
}

RenderPass parse_pass(const std::string& text) {
    if (text == "full") return RenderPass::Full;
    if (text == "diffuse") return RenderPass::DiffuseOnly;
    if (text == "specular") return RenderPass::SpecularOnly;
    throw ConfigError("pass must be full, diffuse or specular, got '" + text + "'");
}

// "name=v1,v2,..." or "name=lo:hi:n" (n evenly spaced values, ends included).
SweepAxis parse_axis(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("axis must look like name=values: '" + text + "'");
    SweepAxis axis{text.substr(0, eq), {}};
    const std::string rest = text.substr(eq + 1);
    if (rest.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(rest);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ConfigError("range axis must be lo:hi:n: '" + text + "'");
        const double lo = csv::parse_double(parts[0], 0), hi = csv::parse_double(parts[1], 0);
        const int n = static_cast<int>(csv::parse_double(parts[2], 0));
        if (n < 1) throw ConfigError("range axis needs at least one value: '" + text + "'");
        for (int i = 0; i < n; ++i) axis.values.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    } else {
        for (const auto& f : csv::split(rest)) axis.values.push_back(csv::parse_double(f, 0));
    }
    if (axis.values.empty()) throw ConfigError("axis '" + axis.name + "' has no values");
    return axis;
}

struct SceneOpts {
    int size = 128;
    std::string light = "headlight";
    unsigned threads = 0;

    void add(CLI::App* app) {
        app->add_option("--size", size, "render resolution (square)")->capture_default_str();
        app->add_option("--light", light, "headlight | oblique:<degrees>")->capture_default_str();
        app->add_option("--threads", threads, "worker threads, 0 = all cores")->capture_default_str();
    }

    SceneConfig scene() const {
        auto s = SceneConfig::with_size(size, size);
        s.light = parse_light(light);
        s.validate();
        return s;
    }

    RemapOptions remap_options() const {
        RemapOptions o;
        o.scene = scene();
        o.render_threads = threads;
        return o;
    }
};

std::string flag_summary(const StabilityFlags& f, const std::vector<std::string>& bound_params) {
    std::string s;
    auto add = [&](bool on, const std::string& what) {
        if (!on) return;
        if (!s.empty()) s += "; ";
        s += what;
    };
    std::string bounds;
    for (const auto& b : bound_params) bounds += (bounds.empty() ? "" : " ") + b;
    add(f.hit_bound, "hit_bound (" + bounds + ")");
    add(f.suspected_local_minimum, "suspected_local_minimum");
    add(f.unmatched_pass, "unmatched_pass");
    return s;
}

// --- remap ---------------------------------------------------------------------

struct RemapCmd {
    std::string source, target, scheme = "two-stage", out;
    SceneOpts scene;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("remap", "remap a uniform material to another model");
        c->add_option("--source", source, "source spec file")->required();
        c->add_option("--target", target, "target model name")->required();
        c->add_option("--scheme", scheme, "simple | two-stage | three-stage")->capture_default_str();
        c->add_option("--out", out, "output directory")->required();
        scene.add(c);
    }

    int run(const std::string& config) {
        const auto src = load_spec(source);
        const auto model = parse_model(target);
        const auto sch = parse_scheme(scheme);
        const auto opt = scene.remap_options();
        const auto result = remap_uniform(src, model, sch, opt);

        const auto src_img = render(src, opt.scene, RenderPass::Full, opt.render_threads);
        const auto dst_img = render(result.target_spec, opt.scene, RenderPass::Full, opt.render_threads);
        const auto cmp = ssim(src_img, dst_img);

        Staging st(out);
        write_pfm(st.path("source.pfm"), src_img);
        write_pfm(st.path("target.pfm"), dst_img);
        write_pfm(st.path("ssim.pfm"), cmp.ssim_map);
        write_ssim_png(st.path("ssim.png"), cmp.ssim_map);
        save_spec(result.target_spec, st.path("target.spec"));
        std::string bounds;
        for (const auto& b : result.bound_params) bounds += (bounds.empty() ? "" : " ") + b;
        csv::write_file(st.path("summary.csv"),
                        "source_model,target_model,scheme,l2,mean_ssim,mean_dissimilarity,hit_bound,local_min,"
                        "unmatched_pass,bound_params\n" +
                            csv::join({std::string(model_name(src.model())), std::string(model_name(model)),
                                       scheme_name(sch), csv::num(result.l2), csv::num(result.mean_ssim),
                                       csv::num(1.0 - result.mean_ssim), result.flags.hit_bound ? "1" : "0",
                                       result.flags.suspected_local_minimum ? "1" : "0",
                                       result.flags.unmatched_pass ? "1" : "0", bounds}) +
                            "\n");
        csv::write_file(st.path("config.toml"), config);
        st.commit();

        std::cout << "l2 " << csv::num(result.l2) << "\nmean_ssim " << csv::num(result.mean_ssim) << '\n';
        if (result.flags.any()) {
            std::cerr << "stability flags: " << flag_summary(result.flags, result.bound_params) << '\n';
            return kExitFlags;
        }
        return 0;
    }
};

// --- sweep ---------------------------------------------------------------------

struct SweepCmd {
    std::string base, target, scheme = "two-stage", out;
    std::vector<std::string> axes;
    SceneOpts scene;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("sweep", "remap every point of a parameter grid and write a database");
        c->add_option("--base", base, "base spec file; axes override its parameters")->required();
        c->add_option("--target", target, "target model name")->required();
        c->add_option("--axis", axes, "name=v1,v2,... or name=lo:hi:n; first axis outermost")->required();
        c->add_option("--scheme", scheme, "simple | two-stage | three-stage")->capture_default_str();
        c->add_option("--out", out, "output directory")->required();
        scene.add(c);
    }

    int run(const std::string& config) {
        ParamSweep sweep{load_spec(base), {}};
        for (const auto& a : axes) sweep.axes.push_back(parse_axis(a));
        const auto model = parse_model(target);
        const auto sch = parse_scheme(scheme);
        const auto table = stability_scan(sweep, model, sch, scene.remap_options(), scene.threads);
        const auto db = database_from_scan(table);

        Staging st(out);
        save_database(st.path("database.csv"), db);
        csv::write_file(st.path("config.toml"), config);
        st.commit();

        std::size_t flagged = 0, failed = 0;
        for (const auto& r : db.rows) {
            if (!r.target) ++failed;
            else if (r.flags.any()) ++flagged;
        }
        std::cout << "rows " << db.rows.size() << "\nflagged " << flagged << "\nfailed " << failed << '\n';
        return 0;
    }
};

// --- fit-transform -------------------------------------------------------------

struct FitCmd {
    std::string database, out;
    bool reverse = false;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("fit-transform", "fit a parametric transform to a remapping database");
        c->add_option("--database", database, "database CSV written by sweep")->required();
        c->add_flag("--reverse", reverse, "fit the target-to-source direction");
        c->add_option("--out", out, "output directory")->required();
    }

    int run(const std::string& config) {
        auto db = load_database(database);
        if (reverse) db = swap_direction(db);
        const auto t = fit_transform(db);

        Staging st(out);
        save_transform(st.path("transform.json"), t);
        csv::write_file(st.path("roughness_curve.csv"), roughness_curve_csv(t));
        csv::write_file(st.path("slope_curve.csv"), slope_curve_csv(t));
        csv::write_file(st.path("slope_levels.csv"), slope_levels_csv(t));
        csv::write_file(st.path("config.toml"), config);
        st.commit();

        std::cout << "roughness_rmse " << csv::num(t.report.roughness_rmse) << "\nslope_max_rel "
                  << csv::num(t.report.slope_max_rel) << '\n';
        return 0;
    }
};

// --- remap-svbrdf --------------------------------------------------------------

struct SvbrdfCmd {
    std::string input, out;
    std::vector<std::string> transforms;
    bool preview = false;
    std::string light = "headlight";
    unsigned threads = 1;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("remap-svbrdf", "apply a transform (or a chain) to a material folder");
        c->add_option("--input", input, "material folder with a material.txt manifest")->required();
        c->add_option("--transform", transforms, "transform JSON; repeat to chain in order")->required();
        c->add_option("--out", out, "output material folder")->required();
        c->add_flag("--preview", preview, "also write plane previews of source and result");
        c->add_option("--light", light, "preview light: headlight | oblique:<degrees>")->capture_default_str();
        c->add_option("--threads", threads, "worker threads, 0 = all cores")->capture_default_str();
    }

    int run(const std::string& config) {
        std::vector<TransformModel> links;
        for (const auto& p : transforms) links.push_back(load_transform(p));
        const auto chained = chain(std::move(links));
        const auto maps = load_material(input);
        RemapStats stats;
        const auto result = remap_maps(maps, chained, &stats, threads);

        Staging st(out);
        save_material(st.dir(), result, manifest_normals_path(input));
        std::string curve = "alpha1,alpha2\n";
        const auto tc = tonemap_curve(chained);
        for (std::size_t i = 0; i < tc.x.size(); ++i) curve += csv::num(tc.x[i]) + "," + csv::num(tc.y[i]) + "\n";
        csv::write_file(st.path("tone_curve.csv"), curve);

        std::string preview_ssim;
        if (preview) {
            PlaneScene scene;
            scene.light = parse_light(light);
            if (scene.light.mode == LightMode::Oblique) scene.light.distance = 1.0;
            scene.light.intensity = PlaneScene{}.light.intensity;
            const auto a = preview_render(maps, scene, RenderPass::Full, threads);
            const auto b = preview_render(result, scene, RenderPass::Full, threads);
            write_png_preview(st.path("preview_source.png"), a);
            write_png_preview(st.path("preview_target.png"), b);
            preview_ssim = csv::num(ssim(preview_render(maps, scene, RenderPass::SpecularOnly, threads),
                                         preview_render(result, scene, RenderPass::SpecularOnly, threads))
                                        .mean_ssim);
        }
        csv::write_file(st.path("remap_summary.csv"),
                        "texels,clamped_roughness,clamped_specular,clamped_diffuse,out_of_domain,preview_specular_ssim\n" +
                            csv::join({std::to_string(stats.texels), std::to_string(stats.clamped_roughness),
                                       std::to_string(stats.clamped_specular), std::to_string(stats.clamped_diffuse),
                                       std::to_string(stats.out_of_domain), preview_ssim}) +
                            "\n");
        csv::write_file(st.path("config.toml"), config);
        st.commit();

        std::cout << "texels " << stats.texels << "\nclamped " << stats.clamped() << "\nout_of_domain "
                  << stats.out_of_domain << '\n';
        return 0;
    }
};

// --- render --------------------------------------------------------------------

struct RenderCmd {
    std::string spec, pass = "full", out;
    SceneOpts scene;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("render", "render the sphere scene for one material");
        c->add_option("--spec", spec, "spec file")->required();
        c->add_option("--pass", pass, "full | diffuse | specular")->capture_default_str();
        c->add_option("--out", out, "output directory")->required();
        scene.add(c);
    }

    int run(const std::string& config) {
        const auto img = render(load_spec(spec), scene.scene(), parse_pass(pass), scene.threads);
        Staging st(out);
        write_pfm(st.path("render.pfm"), img);
        write_png_preview(st.path("render.png"), img);
        csv::write_file(st.path("config.toml"), config);
        st.commit();
        return 0;
    }
};

// --- compare -------------------------------------------------------------------

struct CompareCmd {
    std::vector<std::string> images, specs;
    std::vector<double> angles;
    std::string pass = "full", out;
    int size = 128;
    unsigned threads = 0;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("compare", "image distance between two renders, or two materials over lights");
        auto* img = c->add_option("--images", images, "two PFM images")->expected(2);
        auto* sp = c->add_option("--specs", specs, "two spec files, rendered under each --angles light")->expected(2);
        img->excludes(sp);
        c->add_option("--angles", angles, "light angles in degrees; 0 is the headlight")->delimiter(',');
        c->add_option("--pass", pass, "render pass for --specs")->capture_default_str();
        c->add_option("--size", size, "render resolution for --specs")->capture_default_str();
        c->add_option("--threads", threads, "worker threads, 0 = all cores")->capture_default_str();
        c->add_option("--out", out, "optional output directory for CSV and SSIM map");
    }

    int run(const std::string& config) {
        std::string table = "light_deg,l2,mean_ssim,mean_dissimilarity\n";
        std::optional<DissimilarityReport> single;
        if (!images.empty()) {
            single = ssim(read_pfm_rgb(images[0]), read_pfm_rgb(images[1]));
            std::cout << "l2 " << csv::num(single->l2) << "\nmean_ssim " << csv::num(single->mean_ssim)
                      << "\nmean_dissimilarity " << csv::num(single->mean_dissimilarity) << '\n';
            table += csv::join({"", csv::num(single->l2), csv::num(single->mean_ssim),
                                csv::num(single->mean_dissimilarity)}) + "\n";
        } else if (!specs.empty()) {
            const auto a = load_spec(specs[0]), b = load_spec(specs[1]);
            const auto p = parse_pass(pass);
            std::vector<double> list = angles.empty() ? std::vector<double>{0.0} : angles;
            std::cout << table;
            for (double deg : list) {
                auto scene = SceneConfig::with_size(size, size);
                scene.light = deg == 0.0 ? LightConfig::headlight() : LightConfig::oblique(deg);
                scene.validate();
                const auto r = ssim(render(a, scene, p, threads), render(b, scene, p, threads));
                const auto row = csv::join({csv::num(deg), csv::num(r.l2), csv::num(r.mean_ssim),
                                            csv::num(r.mean_dissimilarity)}) + "\n";
                std::cout << row;
                table += row;
            }
        } else {
            throw ConfigError("compare needs --images or --specs");
        }
        if (!out.empty()) {
            Staging st(out);
            csv::write_file(st.path("compare.csv"), table);
            if (single) {
                write_pfm(st.path("ssim.pfm"), single->ssim_map);
                write_ssim_png(st.path("ssim.png"), single->ssim_map);
            }
            csv::write_file(st.path("config.toml"), config);
            st.commit();
        }
        return 0;
    }
};

// --- roundtrip -----------------------------------------------------------------

struct RoundTripCmd {
    std::string source, via, scheme = "two-stage", out;
    SceneOpts scene;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("roundtrip", "remap to an intermediate model and back");
        c->add_option("--source", source, "source spec file")->required();
        c->add_option("--via", via, "intermediate model name")->required();
        c->add_option("--scheme", scheme, "simple | two-stage | three-stage")->capture_default_str();
        c->add_option("--out", out, "output directory")->required();
        scene.add(c);
    }

    int run(const std::string& config) {
        const auto src = load_spec(source);
        const auto rt = round_trip(src, parse_model(via), parse_scheme(scheme), scene.remap_options());

        Staging st(out);
        save_spec(rt.forward.target_spec, st.path("forward.spec"));
        save_spec(rt.recovered, st.path("recovered.spec"));
        std::string table = "field,original,recovered,deviation\n";
        for (const auto& f : rt.deviation)
            table += csv::join({f.name, csv::num(f.original), csv::num(f.recovered), csv::num(f.deviation)}) + "\n";
        csv::write_file(st.path("roundtrip.csv"), table);
        csv::write_file(st.path("config.toml"), config);
        st.commit();

        std::cout << "max_deviation " << csv::num(rt.max_deviation()) << '\n';
        if (rt.flags.any()) {
            auto bounds = rt.forward.bound_params;
            bounds.insert(bounds.end(), rt.backward.bound_params.begin(), rt.backward.bound_params.end());
            std::cerr << "stability flags: " << flag_summary(rt.flags, bounds) << '\n';
            return kExitFlags;
        }
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BRDF model remapping by image-space fitting"};
    app.set_config("--config", "", "rerun from a config.toml written by an earlier run");
    app.require_subcommand(1);

    RemapCmd remap_cmd;
    SweepCmd sweep_cmd;
    FitCmd fit_cmd;
    SvbrdfCmd svbrdf_cmd;
    RenderCmd render_cmd;
    CompareCmd compare_cmd;
    RoundTripCmd roundtrip_cmd;
    remap_cmd.add(app);
    sweep_cmd.add(app);
    fit_cmd.add(app);
    svbrdf_cmd.add(app);
    render_cmd.add(app);
    compare_cmd.add(app);
    roundtrip_cmd.add(app);
    for (auto* sub : app.get_subcommands({})) sub->configurable();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage", e.what());
        return kExitUsage;
    }

    const auto* sub = app.get_subcommands().front();
    const std::string config = "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false);
    try {
        if (sub->get_name() == "remap") return remap_cmd.run(config);
        if (sub->get_name() == "sweep") return sweep_cmd.run(config);
        if (sub->get_name() == "fit-transform") return fit_cmd.run(config);
        if (sub->get_name() == "remap-svbrdf") return svbrdf_cmd.run(config);
        if (sub->get_name() == "render") return render_cmd.run(config);
        if (sub->get_name() == "compare") return compare_cmd.run(config);
        return roundtrip_cmd.run(config);
    } catch (const Error& e) {
        report_error(e.category(), e.what());
        return exit_code(e);
    } catch (const std::exception& e) {
        report_error("io", e.what());
        return kExitConfig;
    }
}
