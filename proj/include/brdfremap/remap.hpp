#pragma once

// Uniform-material remapping: find parameters of a target model whose
// rendering of the comparison scene matches a source material.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "brdfremap/imgmetric.hpp"
#include "brdfremap/optim.hpp"
#include "brdfremap/render.hpp"

namespace brdfremap {

enum class RemapScheme { Simple, TwoStage, ThreeStage };

inline const char* scheme_name(RemapScheme s) {
    switch (s) {
        case RemapScheme::Simple: return "simple";
        case RemapScheme::TwoStage: return "two-stage";
        case RemapScheme::ThreeStage: return "three-stage";
    }
    return "?";
}

inline RemapScheme parse_scheme(std::string_view name) {
    for (auto s : {RemapScheme::Simple, RemapScheme::TwoStage, RemapScheme::ThreeStage})
        if (name == scheme_name(s)) return s;
    throw ConfigError("unknown remap scheme '" + std::string(name) + "' (simple, two-stage, three-stage)");
}

inline int stage_count(RemapScheme s) { return s == RemapScheme::Simple ? 1 : s == RemapScheme::TwoStage ? 2 : 3; }

struct RemapOptions {
    SceneConfig scene = SceneConfig::with_size(128, 128);
    OptimizerSettings optimizer;
    double target_intensity_scale = 1.0;  // multiplies the light when rendering the target
    unsigned render_threads = 0;
};

struct StabilityFlags {
    bool hit_bound = false;
    bool suspected_local_minimum = false;
    bool unmatched_pass = false;  // target cannot express a pass the source has

    bool any() const { return hit_bound || suspected_local_minimum || unmatched_pass; }
};

struct RemapResult {
    BrdfSpec target_spec;
    std::vector<OptimizationOutcome> stages;
    double l2 = 0;
    double mean_ssim = 1;
    StabilityFlags flags;
    std::vector<std::string> bound_params;
};

// Raised when an optimisation stage cannot proceed; keeps the stage index.
class StageError : public NumericError {
public:
    StageError(int stage, const std::string& what)
        : NumericError("stage " + std::to_string(stage) + ": " + what), stage_(stage) {}
    int stage() const { return stage_; }

private:
    int stage_;
};

// Same material with the specular colour expressed as F0.
inline BrdfSpec to_f0_form(const BrdfSpec& s) {
    if (s.specular_param() == SpecularParam::F0) return s;
    auto out = BrdfSpec::make(s.model(), SpecularParam::F0);
    out.set_diffuse(diffuse_of(s)).set_specular(specular_f0(s)).set_roughness(roughness_of(s));
    return out;
}

// Default starting point: diffuse copied, roughness copied when the source
// has one (else 0.3), specular 0.5; clamped into the target's bounds.
inline BrdfSpec seed_spec(const BrdfSpec& source, ModelFamily target_model) {
    auto seed = BrdfSpec::make(target_model);
    seed.set_diffuse(diffuse_of(source));
    if (has_specular_term(target_model)) {
        seed.set_specular(Rgb(0.5));
        seed.set_roughness(source.has(kRoughnessName) ? source.get(kRoughnessName) : 0.3);
    }
    auto v = seed.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], seed.params()[i].lower, seed.params()[i].upper);
    seed.set_values(v);
    return seed;
}

namespace detail {

inline bool at_value(double x, double bound) { return std::abs(x - bound) <= 1e-6 * std::max(1.0, std::abs(bound)); }

// Parameters sitting on a finite upper bound, a non-zero lower bound, or in
// the trimmed region of the bounded-albedo Ward lobe.
inline std::vector<std::string> bound_hits(const BrdfSpec& s) {
    std::vector<std::string> out;
    for (const auto& p : s.params()) {
        bool hit = (std::isfinite(p.upper) && at_value(p.value, p.upper)) ||
                   (p.lower != 0.0 && at_value(p.value, p.lower));
        if (s.model() == ModelFamily::WardB && p.term == Term::Specular && p.name != kRoughnessName &&
            p.value >= 1.0 - 1e-3)
            hit = true;
        if (hit) out.push_back(p.name);
    }
    return out;
}

inline bool has_energy(const RenderedImage& img) {
    return std::any_of(img.pixels.begin(), img.pixels.end(), [](double v) { return v != 0.0; });
}

}  // namespace detail

inline RemapResult remap_uniform(const BrdfSpec& source, ModelFamily target_model, RemapScheme scheme,
                                 const RemapOptions& opt = {}, const std::optional<BrdfSpec>& x0 = std::nullopt) {
    source.validate();
    opt.scene.validate();
    if (!(opt.target_intensity_scale > 0) || !std::isfinite(opt.target_intensity_scale))
        throw ConfigError("target intensity scale must be positive");

    BrdfSpec current = x0 ? to_f0_form(*x0) : seed_spec(source, target_model);
    if (current.model() != target_model) throw ConfigError("initial guess is not a " + std::string(model_name(target_model)) + " spec");
    current.validate();

    SceneConfig target_scene = opt.scene;
    target_scene.light.intensity = opt.scene.light.intensity * opt.target_intensity_scale;
    const ShadingParams src = resolve(source);
    auto source_render = [&](RenderPass pass) { return render(src, opt.scene, pass, opt.render_threads); };

    RemapResult result;
    auto fit = [&](const std::vector<std::size_t>& idx, const RenderedImage& ref, int stage) {
        const auto& params = current.params();
        OptimizationProblem prob;
        prob.settings = opt.optimizer;
        for (auto i : idx) {
            prob.x0.push_back(params[i].value);
            prob.lower.push_back(params[i].lower);
            prob.upper.push_back(params[i].upper);
        }
        BrdfSpec work = current;
        prob.residual_fn = [&, work](std::span<const double> x) mutable {
            auto v = work.values();
            for (std::size_t j = 0; j < idx.size(); ++j) v[idx[j]] = x[j];
            work.set_values(v);
            return residual_vector(render(resolve(work), target_scene, ref.pass, opt.render_threads), ref);
        };
        OptimizationOutcome out;
        try {
            if (idx.empty()) {
                const auto r = prob.residual_fn(prob.x0);
                out.initial_cost = out.final_cost = detail::half_squared_norm(r);
                out.n_evals = 1;
                out.termination = Termination::GradTol;
                out.converged = true;
            } else {
                out = minimize(prob);
            }
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(stage, e.what());
        }
        auto v = current.values();
        for (std::size_t j = 0; j < idx.size(); ++j) v[idx[j]] = out.x_final[j];
        current.set_values(v);
        result.stages.push_back(std::move(out));
    };

    std::vector<std::size_t> all(current.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    const auto src_full = source_render(RenderPass::Full);
    if (scheme == RemapScheme::Simple) {
        fit(all, src_full, 1);
    } else {
        fit(current.indices(Term::Diffuse), source_render(RenderPass::DiffuseOnly), 1);
        fit(current.indices(Term::Specular), source_render(RenderPass::SpecularOnly), 2);
        if (scheme == RemapScheme::ThreeStage) fit(all, src_full, 3);
    }

    const auto dst_full = render(resolve(current), target_scene, RenderPass::Full, opt.render_threads);
    result.l2 = l2_distance(dst_full, src_full);
    result.mean_ssim = ssim(src_full, dst_full).mean_ssim;
    result.bound_params = detail::bound_hits(current);
    result.flags.hit_bound = !result.bound_params.empty();
    if (!has_specular_term(target_model) && has_specular_term(source.model()))
        result.flags.unmatched_pass = detail::has_energy(source_render(RenderPass::SpecularOnly));
    result.target_spec = std::move(current);
    return result;
}

// --- Round trip --------------------------------------------------------------

struct CanonicalField {
    std::string name;
    double original = 0;
    double recovered = 0;
    double deviation = 0;
};

struct RoundTripResult {
    RemapResult forward;
    RemapResult backward;
    BrdfSpec recovered;
    std::vector<CanonicalField> deviation;  // diffuse, F0 and roughness
    StabilityFlags flags;

    double max_deviation(std::string_view prefix = "") const {
        double m = 0;
        for (const auto& f : deviation)
            if (f.name.starts_with(prefix)) m = std::max(m, f.deviation);
        return m;
    }
};

inline constexpr double kDeviationFloor = 1e-3;

inline std::vector<CanonicalField> compare_canonical(const BrdfSpec& original, const BrdfSpec& recovered) {
    std::vector<CanonicalField> out;
    auto add = [&](std::string name, double a, double b) {
        out.push_back({std::move(name), a, b, std::abs(b - a) / std::max(std::abs(a), kDeviationFloor)});
    };
    const Rgb da = diffuse_of(original), db = diffuse_of(recovered);
    for (int c = 0; c < 3; ++c) add(std::string(kDiffuseNames[c]), da[c], db[c]);
    if (has_specular_term(original.model())) {
        const Rgb fa = specular_f0(original), fb = specular_f0(recovered);
        for (int c = 0; c < 3; ++c) add("f0." + std::string(1, "rgb"[c]), fa[c], fb[c]);
        add(std::string(kRoughnessName), roughness_of(original), roughness_of(recovered));
    }
    return out;
}

inline RoundTripResult round_trip(const BrdfSpec& source, ModelFamily intermediate, RemapScheme scheme,
                                  const RemapOptions& opt = {}) {
    RoundTripResult rt;
    rt.forward = remap_uniform(source, intermediate, scheme, opt);
    rt.backward = remap_uniform(rt.forward.target_spec, source.model(), scheme, opt);
    rt.recovered = rt.backward.target_spec;
    rt.deviation = compare_canonical(source, rt.recovered);
    rt.flags.hit_bound = rt.forward.flags.hit_bound || rt.backward.flags.hit_bound;
    rt.flags.unmatched_pass = rt.forward.flags.unmatched_pass || rt.backward.flags.unmatched_pass;
    return rt;
}

// --- Parameter sweeps ----------------------------------------------------------

// One sweep axis. Group names ("diffuse", "specular", "eta", "k") set all
// three channels; anything else names a single parameter.
struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

inline void apply_axis_value(BrdfSpec& s, std::string_view name, double v) {
    static constexpr std::pair<std::string_view, const std::array<std::string_view, 3>*> groups[] = {
        {"diffuse", &kDiffuseNames}, {"specular", &kSpecularNames}, {"eta", &kEtaNames}, {"k", &kKappaNames}};
    for (const auto& [g, names] : groups)
        if (name == g) {
            for (auto n : *names) s.set(n, v);
            return;
        }
    s.set(name, v);
}

struct ParamSweep {
    BrdfSpec base;
    std::vector<SweepAxis> axes;  // first axis outermost

    std::vector<std::size_t> shape() const {
        std::vector<std::size_t> s;
        for (const auto& a : axes) s.push_back(a.values.size());
        return s;
    }

    std::vector<BrdfSpec> points() const {
        std::size_t total = 1;
        for (const auto& a : axes) total *= a.values.size();
        std::vector<BrdfSpec> out;
        out.reserve(total);
        std::vector<std::size_t> idx(axes.size(), 0);
        for (std::size_t n = 0; n < total; ++n) {
            BrdfSpec s = base;
            for (std::size_t a = 0; a < axes.size(); ++a) apply_axis_value(s, axes[a].name, axes[a].values[idx[a]]);
            s.validate();
            out.push_back(std::move(s));
            for (std::size_t a = axes.size(); a-- > 0;) {
                if (++idx[a] < axes[a].values.size()) break;
                idx[a] = 0;
            }
        }
        return out;
    }
};

struct ScanRow {
    BrdfSpec source;
    std::optional<RemapResult> result;
    std::string error;  // set when the remap threw

    bool flagged() const { return !result || result->flags.any(); }
};

struct ScanTable {
    ModelFamily source_model = ModelFamily::Lambert;
    ModelFamily target_model = ModelFamily::Lambert;
    RemapScheme scheme = RemapScheme::TwoStage;
    std::vector<SweepAxis> axes;
    std::vector<ScanRow> rows;
};

// Marks rows that break the continuity of a sweep. Along every grid line a
// target parameter step larger than max(10 x the line's median step,
// 2% of the parameter's magnitude on the line) flags the endpoint with the
// lower SSIM; a row with SSIM < 0.95 next to one with SSIM >= 0.99 is
// flagged as well.
inline void flag_discontinuities(ScanTable& t) {
    std::vector<std::size_t> shape;
    for (const auto& a : t.axes) shape.push_back(a.values.size());
    std::vector<std::size_t> stride(shape.size(), 1);
    for (std::size_t a = shape.size(); a-- > 1;) stride[a - 1] = stride[a] * shape[a];

    for (std::size_t a = 0; a < shape.size(); ++a) {
        if (shape[a] < 2) continue;
        for (std::size_t start = 0; start < t.rows.size(); ++start) {
            if ((start / stride[a]) % shape[a] != 0) continue;  // not the first point of a line
            std::vector<std::size_t> line;
            for (std::size_t i = 0; i < shape[a]; ++i) {
                const auto r = start + i * stride[a];
                if (t.rows[r].result) line.push_back(r);
            }
            for (std::size_t i = 1; i < line.size(); ++i) {
                auto& lo = *t.rows[line[i - 1]].result;
                auto& hi = *t.rows[line[i]].result;
                auto& worse = lo.mean_ssim <= hi.mean_ssim ? lo : hi;
                const double best = std::max(lo.mean_ssim, hi.mean_ssim);
                if (worse.mean_ssim < 0.95 && best >= 0.99) worse.flags.suspected_local_minimum = true;
            }
            if (line.size() < 3) continue;
            const std::size_t np = t.rows[line[0]].result->target_spec.size();
            for (std::size_t p = 0; p < np; ++p) {
                std::vector<double> steps;
                double mag = 0;
                for (std::size_t i = 0; i < line.size(); ++i) {
                    const double v = t.rows[line[i]].result->target_spec.params()[p].value;
                    mag = std::max(mag, std::abs(v));
                    if (i > 0) steps.push_back(std::abs(v - t.rows[line[i - 1]].result->target_spec.params()[p].value));
                }
                auto sorted = steps;
                std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
                const double limit = std::max(10.0 * sorted[sorted.size() / 2], 0.02 * mag + 1e-6);
                for (std::size_t i = 0; i < steps.size(); ++i) {
                    if (steps[i] <= limit) continue;
                    auto& lo = *t.rows[line[i]].result;
                    auto& hi = *t.rows[line[i + 1]].result;
                    (lo.mean_ssim <= hi.mean_ssim ? lo : hi).flags.suspected_local_minimum = true;
                }
            }
        }
    }
}

// One remap per grid point, in grid order. Failures are recorded per row.
inline ScanTable stability_scan(const ParamSweep& sweep, ModelFamily target_model, RemapScheme scheme,
                                const RemapOptions& opt = {}, unsigned threads = 0) {
    ScanTable t{sweep.base.model(), target_model, scheme, sweep.axes, {}};
    for (auto& s : sweep.points()) t.rows.push_back({std::move(s), std::nullopt, {}});
    RemapOptions inner = opt;
    if (resolve_threads(threads) > 1) inner.render_threads = 1;
    parallel_for(t.rows.size(), threads, [&](std::size_t i) {
        try {
            t.rows[i].result = remap_uniform(t.rows[i].source, target_model, scheme, inner);
        } catch (const Error& e) {
            t.rows[i].error = e.what();
        }
    });
    flag_discontinuities(t);
    return t;
}

}  // namespace brdfremap
