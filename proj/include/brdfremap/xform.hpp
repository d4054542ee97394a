#pragma once

// Compact parametric transformation between two models' parameter spaces,
// learned from a database of uniform remaps:
//
//   alpha2 = clamp(poly(alpha1)),  poly of degree <= 4
//   s2     = k(alpha1) * s1        per channel, on F0
//   k(a)   = c0 + c1 exp(-c2 a) + c3 exp(-c4 a^2)
//   d2     = scale * d1 + offset   per channel
//
// Also hosts the kernel ridge baseline used to compare extrapolation.

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <map>
#include <set>

#include "brdfremap/csv.hpp"
#include "brdfremap/remap.hpp"

namespace brdfremap {

// Model-independent view of a uniform material; specular is F0.
struct MaterialParams {
    Rgb diffuse;
    Rgb specular;
    double roughness = 1.0;

    bool operator==(const MaterialParams&) const = default;
};

inline MaterialParams canonical(const BrdfSpec& s) { return {diffuse_of(s), specular_f0(s), roughness_of(s)}; }

inline BrdfSpec to_spec(ModelFamily model, const MaterialParams& p) {
    auto s = BrdfSpec::make(model);
    s.set_diffuse(p.diffuse);
    if (has_specular_term(model)) s.set_specular(p.specular).set_roughness(p.roughness);
    return s;
}

// --- Database ----------------------------------------------------------------

struct DatabaseRow {
    BrdfSpec source;
    std::optional<BrdfSpec> target;
    StabilityFlags flags;
    double l2 = 0;
    double ssim = 0;
    std::string error;

    bool usable() const { return target.has_value() && !flags.any(); }
};

struct RemapDatabase {
    ModelFamily source_model = ModelFamily::Lambert;
    ModelFamily target_model = ModelFamily::Lambert;
    RemapScheme scheme = RemapScheme::TwoStage;
    std::vector<SweepAxis> axes;
    std::vector<DatabaseRow> rows;
};

inline RemapDatabase database_from_scan(const ScanTable& t) {
    RemapDatabase db{t.source_model, t.target_model, t.scheme, t.axes, {}};
    for (const auto& r : t.rows) {
        DatabaseRow row{r.source, std::nullopt, {}, 0, 0, r.error};
        if (r.result) {
            row.target = r.result->target_spec;
            row.flags = r.result->flags;
            row.l2 = r.result->l2;
            row.ssim = r.result->mean_ssim;
        }
        db.rows.push_back(std::move(row));
    }
    return db;
}

// |roughness| x |specular| remaps of `base`; the specular axis is named by
// `specular_axis` ("specular" for F0 sources, "ior" for real-IOR ones).
inline RemapDatabase build_database(const BrdfSpec& base, ModelFamily target_model,
                                    const std::vector<double>& roughness_grid, const SweepAxis& specular_axis,
                                    RemapScheme scheme = RemapScheme::TwoStage, const RemapOptions& opt = {},
                                    unsigned threads = 0) {
    ParamSweep sweep{base, {{std::string(kRoughnessName), roughness_grid}, specular_axis}};
    return database_from_scan(stability_scan(sweep, target_model, scheme, opt, threads));
}

inline RemapDatabase build_database(ModelFamily source_model, ModelFamily target_model,
                                    const std::vector<double>& roughness_grid,
                                    const std::vector<double>& specular_grid,
                                    RemapScheme scheme = RemapScheme::TwoStage, const RemapOptions& opt = {},
                                    unsigned threads = 0) {
    return build_database(BrdfSpec::make(source_model), target_model, roughness_grid, {"specular", specular_grid},
                          scheme, opt, threads);
}

// The same rows read in the opposite direction, for fitting an inverse.
inline RemapDatabase swap_direction(const RemapDatabase& db) {
    RemapDatabase out{db.target_model, db.source_model, db.scheme, {}, {}};
    for (const auto& r : db.rows) {
        if (!r.target) continue;
        out.rows.push_back({*r.target, to_f0_form(r.source), r.flags, r.l2, r.ssim, r.error});
    }
    return out;
}

inline std::string database_csv(const RemapDatabase& db) {
    const auto src_proto = db.rows.empty() ? BrdfSpec::make(db.source_model) : db.rows.front().source;
    const auto dst_proto = BrdfSpec::make(db.target_model);
    std::vector<std::string> head{"src.model"};
    for (const auto& p : src_proto.params()) head.push_back("src." + p.name);
    head.push_back("dst.model");
    for (const auto& p : dst_proto.params()) head.push_back("dst." + p.name);
    for (auto c : {"l2", "ssim", "hit_bound", "local_min", "unmatched_pass", "error"}) head.push_back(c);
    std::string out = csv::join(head) + "\n";
    for (const auto& r : db.rows) {
        std::vector<std::string> f{std::string(model_name(db.source_model))};
        for (const auto& p : r.source.params()) f.push_back(csv::num(p.value));
        f.push_back(std::string(model_name(db.target_model)));
        for (std::size_t i = 0; i < dst_proto.size(); ++i)
            f.push_back(r.target ? csv::num(r.target->params()[i].value) : "");
        f.push_back(r.target ? csv::num(r.l2) : "");
        f.push_back(r.target ? csv::num(r.ssim) : "");
        for (bool b : {r.flags.hit_bound, r.flags.suspected_local_minimum, r.flags.unmatched_pass})
            f.push_back(b ? "1" : "0");
        f.push_back(csv::sanitize(r.error));
        out += csv::join(f) + "\n";
    }
    return out;
}

inline void save_database(const std::string& path, const RemapDatabase& db) { csv::write_file(path, database_csv(db)); }

inline RemapDatabase parse_database(std::istream& in) {
    const auto t = csv::read(in);
    const int src_model = t.column("src.model"), dst_model = t.column("dst.model");
    if (src_model != 0 || dst_model < 0) throw ParseError("database header must start with src.model and contain dst.model", 1);
    if (t.rows.empty()) throw ParseError("database has no rows");

    RemapDatabase db;
    db.source_model = parse_model(t.rows[0][static_cast<std::size_t>(src_model)]);
    db.target_model = parse_model(t.rows[0][static_cast<std::size_t>(dst_model)]);
    SpecularParam sp = SpecularParam::F0;
    if (t.column("src.ior") >= 0) sp = SpecularParam::RealIor;
    if (t.column("src.eta.r") >= 0) sp = SpecularParam::ComplexIor;
    const auto src_proto = BrdfSpec::make(db.source_model, sp);
    const auto dst_proto = BrdfSpec::make(db.target_model);
    auto col = [&](const std::string& name) {
        const int c = t.column(name);
        if (c < 0) throw ParseError("database is missing column '" + name + "'", 1);
        return static_cast<std::size_t>(c);
    };

    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const int line = static_cast<int>(i) + 2;
        if (parse_model(f[static_cast<std::size_t>(src_model)]) != db.source_model ||
            parse_model(f[static_cast<std::size_t>(dst_model)]) != db.target_model)
            throw ParseError("mixed model pairs in one database", line);
        DatabaseRow row{src_proto, std::nullopt, {}, 0, 0, f[col("error")]};
        for (const auto& p : src_proto.params()) row.source.set(p.name, csv::parse_double(f[col("src." + p.name)], line));
        if (!f[col("l2")].empty()) {
            auto dst = dst_proto;
            for (const auto& p : dst_proto.params()) dst.set(p.name, csv::parse_double(f[col("dst." + p.name)], line));
            row.target = dst;
            row.l2 = csv::parse_double(f[col("l2")], line);
            row.ssim = csv::parse_double(f[col("ssim")], line);
        }
        row.flags = {f[col("hit_bound")] == "1", f[col("local_min")] == "1", f[col("unmatched_pass")] == "1"};
        db.rows.push_back(std::move(row));
    }
    return db;
}

inline RemapDatabase load_database(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_database(in);
}

// --- Transform model ------------------------------------------------------------

inline double polyval(const std::vector<double>& c, double x) {
    double y = 0;
    for (std::size_t i = c.size(); i-- > 0;) y = y * x + c[i];
    return y;
}

// Least-squares polynomial, coefficients in ascending powers.
inline std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, degree + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double p = 1;
        for (int j = 0; j <= degree; ++j, p *= x[static_cast<std::size_t>(i)]) a(i, j) = p;
        b(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    return {c.data(), c.data() + c.size()};
}

using SlopeCoeffs = std::array<double, 5>;

inline double slope_model(const SlopeCoeffs& c, double a) {
    return c[0] + c[1] * std::exp(-c[2] * a) + c[3] * std::exp(-c[4] * a * a);
}

struct AffineMap {
    double scale = 1;
    double offset = 0;

    double operator()(double x) const { return scale * x + offset; }
};

struct ApplyDiagnostic {
    bool out_of_domain = false;
    bool roughness_clamped = false;
};

struct TransformModel {
    ModelFamily source_model = ModelFamily::GGX;
    ModelFamily target_model = ModelFamily::GGX;
    std::vector<double> roughness_poly{0.0, 1.0};
    SlopeCoeffs slope_coeffs{1, 0, 0, 0, 0};
    std::array<AffineMap, 3> diffuse_map{};

    struct Domain {
        double roughness_min = kRoughnessMin, roughness_max = 1;
        double specular_min = 0, specular_max = 1;
    } domain;

    struct Report {
        double roughness_rmse = 0;
        double slope_max_rel = 0;  // fitted k vs per-level slopes
        double specular_rmse = 0;
        std::array<double, 3> diffuse_rmse{};
        std::vector<double> levels;  // roughness levels used
        std::vector<double> k_hat;   // per-level zero-intercept slopes
    } report;

    static TransformModel identity(ModelFamily m) {
        TransformModel t;
        t.source_model = t.target_model = m;
        return t;
    }

    double roughness(double a1, bool* clamped = nullptr) const {
        const double raw = polyval(roughness_poly, a1);
        const double a2 = std::clamp(raw, kRoughnessMin, 1.0);
        if (clamped) *clamped = !(a2 == raw);
        return a2;
    }

    double slope(double a1) const { return slope_model(slope_coeffs, a1); }

    MaterialParams apply(const MaterialParams& in, ApplyDiagnostic* diag = nullptr) const {
        MaterialParams out;
        bool clamped = false;
        out.roughness = roughness(in.roughness, &clamped);
        const double k = slope(in.roughness);
        out.specular = in.specular * k;
        for (int c = 0; c < 3; ++c) out.diffuse[c] = diffuse_map[c](in.diffuse[c]);
        if (diag) {
            diag->roughness_clamped = clamped;
            const double tol = 1e-9;
            diag->out_of_domain = in.roughness < domain.roughness_min - tol ||
                                  in.roughness > domain.roughness_max + tol ||
                                  in.specular.max_component() > domain.specular_max + tol ||
                                  std::min({in.specular.r, in.specular.g, in.specular.b}) < domain.specular_min - tol;
        }
        return out;
    }
};

inline MaterialParams apply_transform(const TransformModel& t, const MaterialParams& p, ApplyDiagnostic* diag = nullptr) {
    return t.apply(p, diag);
}

inline BrdfSpec apply_transform(const TransformModel& t, const BrdfSpec& s, ApplyDiagnostic* diag = nullptr) {
    if (s.model() != t.source_model)
        throw ConfigError("transform expects " + std::string(model_name(t.source_model)) + ", got " +
                          std::string(model_name(s.model())));
    return to_spec(t.target_model, t.apply(canonical(s), diag));
}

// Sequential application of transforms whose model pairs line up.
struct ChainedTransform {
    std::vector<TransformModel> links;

    ModelFamily source_model() const { return links.front().source_model; }
    ModelFamily target_model() const { return links.back().target_model; }

    double roughness(double a1) const {
        for (const auto& t : links) a1 = t.roughness(a1);
        return a1;
    }

    MaterialParams apply(const MaterialParams& in, ApplyDiagnostic* diag = nullptr) const {
        MaterialParams p = in;
        ApplyDiagnostic total;
        for (const auto& t : links) {
            ApplyDiagnostic d;
            p = t.apply(p, &d);
            total.out_of_domain |= d.out_of_domain;
            total.roughness_clamped |= d.roughness_clamped;
        }
        if (diag) *diag = total;
        return p;
    }
};

inline ChainedTransform chain(std::vector<TransformModel> links) {
    if (links.empty()) throw ConfigError("cannot chain an empty list of transforms");
    for (std::size_t i = 1; i < links.size(); ++i)
        if (links[i - 1].target_model != links[i].source_model)
            throw ConfigError("chain mismatch at link " + std::to_string(i) + ": " +
                              std::string(model_name(links[i - 1].target_model)) + " -> " +
                              std::string(model_name(links[i].source_model)));
    return {std::move(links)};
}

inline BrdfSpec apply_transform(const ChainedTransform& t, const BrdfSpec& s, ApplyDiagnostic* diag = nullptr) {
    if (s.model() != t.source_model()) throw ConfigError("chain expects " + std::string(model_name(t.source_model())));
    return to_spec(t.target_model(), t.apply(canonical(s), diag));
}

// --- Fitting ----------------------------------------------------------------------

// Not enough usable database rows along one grid axis.
class InsufficientDataError : public DomainError {
public:
    InsufficientDataError(std::string axis, const std::string& what)
        : DomainError(axis + " axis: " + what), axis_(std::move(axis)) {}
    const std::string& axis() const { return axis_; }

private:
    std::string axis_;
};

struct FitRows {
    std::vector<double> levels;
    std::vector<std::vector<const DatabaseRow*>> by_level;
};

inline constexpr double kMinUsableFraction = 0.6;
inline constexpr std::size_t kMinRoughnessLevels = 5;
inline constexpr std::size_t kMinSpecularValues = 3;
inline constexpr double kLevelTolerance = 1e-5;

// Usable rows grouped by source roughness. A level is dropped when fewer
// than 60% of its rows are usable or it has fewer than three distinct
// specular values left.
inline FitRows select_fit_rows(const RemapDatabase& db) {
    if (!has_specular_term(db.source_model) || !has_specular_term(db.target_model))
        throw ConfigError("transform fitting needs specular terms on both models");
    // Roughness values closer than kLevelTolerance (relative) form one level;
    // a swapped database carries optimizer noise in its source roughness.
    std::vector<const DatabaseRow*> sorted;
    for (const auto& r : db.rows) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const DatabaseRow* a, const DatabaseRow* b) {
        return roughness_of(a->source) < roughness_of(b->source);
    });
    std::vector<std::pair<double, std::vector<const DatabaseRow*>>> all;
    for (const auto* r : sorted) {
        const double a = roughness_of(r->source);
        if (all.empty() || a - roughness_of(all.back().second.front()->source) > kLevelTolerance * std::max(a, 1e-3))
            all.push_back({0.0, {}});
        all.back().second.push_back(r);
    }
    for (auto& [alpha, rows] : all) {
        for (const auto* r : rows) alpha += roughness_of(r->source);
        alpha /= static_cast<double>(rows.size());
    }

    FitRows out;
    std::size_t pass_flags = 0;
    for (const auto& [alpha, rows] : all) {
        std::vector<const DatabaseRow*> usable;
        for (const auto* r : rows)
            if (r->usable()) usable.push_back(r);
        if (static_cast<double>(usable.size()) < kMinUsableFraction * static_cast<double>(rows.size())) continue;
        ++pass_flags;
        std::vector<double> spec;
        for (const auto* r : usable) spec.push_back(specular_f0(r->source).mean());
        std::sort(spec.begin(), spec.end());
        std::size_t distinct = spec.empty() ? 0 : 1;
        for (std::size_t i = 1; i < spec.size(); ++i)
            if (spec[i] - spec[i - 1] > kLevelTolerance * std::max(spec[i], 1e-3)) ++distinct;
        if (distinct < kMinSpecularValues) continue;
        out.levels.push_back(alpha);
        out.by_level.push_back(std::move(usable));
    }
    if (out.levels.size() < kMinRoughnessLevels) {
        if (pass_flags >= kMinRoughnessLevels)
            throw InsufficientDataError("specular", "fewer than 3 usable specular values on too many roughness levels");
        throw InsufficientDataError("roughness", "only " + std::to_string(out.levels.size()) +
                                                     " usable roughness levels, need 5");
    }
    return out;
}

inline SlopeCoeffs fit_slope_coeffs(const std::vector<double>& alpha, const std::vector<double>& k_hat,
                                    double* max_rel = nullptr) {
    const double k_first = k_hat.front(), k_last = k_hat.back();
    double k_mean = 0;
    for (double k : k_hat) k_mean += k;
    k_mean /= static_cast<double>(k_hat.size());
    const double d = k_first - k_last;
    const SlopeCoeffs seeds[] = {
        {k_last, d, 3, 0, 1},
        {k_last, 0, 1, d, 3},
        {k_last, d / 2, 1, d / 2, 10},
        {k_mean, 0, 1, 0, 1},
    };

    OptimizationProblem prob;
    prob.residual_fn = [&](std::span<const double> c) {
        std::vector<double> r(alpha.size());
        const SlopeCoeffs cc{c[0], c[1], c[2], c[3], c[4]};
        for (std::size_t i = 0; i < alpha.size(); ++i)
            r[i] = (slope_model(cc, alpha[i]) - k_hat[i]) / std::max(std::abs(k_hat[i]), 1e-12);
        return r;
    };
    prob.lower = {-kInf, -kInf, 0, -kInf, 0};
    prob.upper = {kInf, kInf, 200, kInf, 200};
    prob.settings.max_evals = 4000;
    prob.settings.step_tol = 1e-12;
    prob.settings.cost_tol = 1e-16;

    SlopeCoeffs best = seeds[0];
    double best_cost = kInf;
    for (const auto& s : seeds) {
        prob.x0.assign(s.begin(), s.end());
        const auto out = minimize(prob);
        if (out.final_cost < best_cost) {
            best_cost = out.final_cost;
            std::copy(out.x_final.begin(), out.x_final.end(), best.begin());
        }
    }
    if (max_rel) {
        *max_rel = 0;
        for (double r : prob.residual_fn(std::vector<double>(best.begin(), best.end())))
            *max_rel = std::max(*max_rel, std::abs(r));
    }
    return best;
}

inline TransformModel fit_transform(const RemapDatabase& db) {
    const auto data = select_fit_rows(db);
    TransformModel t;
    t.source_model = db.source_model;
    t.target_model = db.target_model;

    std::vector<double> a1, a2;
    std::array<std::vector<double>, 3> d1, d2;
    double s_min = kInf, s_max = 0;
    for (std::size_t l = 0; l < data.levels.size(); ++l) {
        double num = 0, den = 0;
        for (const auto* r : data.by_level[l]) {
            const auto src = canonical(r->source);
            const auto dst = canonical(*r->target);
            a1.push_back(src.roughness);
            a2.push_back(dst.roughness);
            for (int c = 0; c < 3; ++c) {
                num += src.specular[c] * dst.specular[c];
                den += src.specular[c] * src.specular[c];
                d1[c].push_back(src.diffuse[c]);
                d2[c].push_back(dst.diffuse[c]);
                s_min = std::min(s_min, src.specular[c]);
                s_max = std::max(s_max, src.specular[c]);
            }
        }
        if (den == 0.0)
            throw InsufficientDataError("specular", "all specular values are zero at roughness " + csv::num(data.levels[l]));
        t.report.levels.push_back(data.levels[l]);
        t.report.k_hat.push_back(num / den);
    }

    const int degree = static_cast<int>(std::min<std::size_t>(4, data.levels.size() - 1));
    t.roughness_poly = polyfit(a1, a2, degree);
    t.slope_coeffs = fit_slope_coeffs(t.report.levels, t.report.k_hat, &t.report.slope_max_rel);

    for (int c = 0; c < 3; ++c) {
        const auto& x = d1[c];
        const auto& y = d2[c];
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += x[i] * y[i];
            sxx += x[i] * x[i];
        }
        if (*hi - *lo <= 1e-4 * std::max(1.0, std::abs(*hi))) {
            // No usable spread: a pure scale, or identity when the source diffuse is zero.
            t.diffuse_map[c] = sxx > 0 ? AffineMap{sxy / sxx, 0} : AffineMap{};
        } else {
            const auto n = static_cast<double>(x.size());
            double mx = 0, my = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                mx += x[i] / n;
                my += y[i] / n;
            }
            double cov = 0, var = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                cov += (x[i] - mx) * (y[i] - my);
                var += (x[i] - mx) * (x[i] - mx);
            }
            t.diffuse_map[c] = {cov / var, my - cov / var * mx};
        }
    }

    t.domain = {data.levels.front(), data.levels.back(), s_min, s_max};

    double ra = 0, rs = 0;
    std::size_t n = 0;
    for (const auto& rows : data.by_level)
        for (const auto* r : rows) {
            const auto src = canonical(r->source);
            const auto dst = canonical(*r->target);
            const auto pred = t.apply(src);
            ra += (pred.roughness - dst.roughness) * (pred.roughness - dst.roughness);
            for (int c = 0; c < 3; ++c) {
                rs += (pred.specular[c] - dst.specular[c]) * (pred.specular[c] - dst.specular[c]);
                t.report.diffuse_rmse[c] += (pred.diffuse[c] - dst.diffuse[c]) * (pred.diffuse[c] - dst.diffuse[c]);
            }
            ++n;
        }
    t.report.roughness_rmse = std::sqrt(ra / static_cast<double>(n));
    t.report.specular_rmse = std::sqrt(rs / (3.0 * static_cast<double>(n)));
    for (auto& d : t.report.diffuse_rmse) d = std::sqrt(d / static_cast<double>(n));
    return t;
}

// --- Serialization ------------------------------------------------------------------

inline constexpr const char* kTransformFormat = "brdfremap-transform";
inline constexpr int kTransformVersion = 1;

inline nlohmann::json to_json(const TransformModel& t) {
    nlohmann::json j;
    j["format"] = kTransformFormat;
    j["version"] = kTransformVersion;
    j["models"] = {{"source", model_name(t.source_model)}, {"target", model_name(t.target_model)}};
    j["roughness_poly"] = t.roughness_poly;
    j["slope_coeffs"] = t.slope_coeffs;
    auto& dm = j["diffuse_map"] = nlohmann::json::array();
    for (const auto& m : t.diffuse_map) dm.push_back({{"scale", m.scale}, {"offset", m.offset}});
    j["domain"] = {{"roughness", {t.domain.roughness_min, t.domain.roughness_max}},
                   {"specular", {t.domain.specular_min, t.domain.specular_max}}};
    j["residuals"] = {{"roughness_rmse", t.report.roughness_rmse},
                      {"slope_max_rel", t.report.slope_max_rel},
                      {"specular_rmse", t.report.specular_rmse},
                      {"diffuse_rmse", t.report.diffuse_rmse},
                      {"levels", t.report.levels},
                      {"k_hat", t.report.k_hat}};
    return j;
}

inline TransformModel transform_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kTransformFormat) throw ConfigError("not a transform document");
        if (j.at("version").get<int>() != kTransformVersion)
            throw ConfigError("unsupported transform version " + std::to_string(j.at("version").get<int>()));
        TransformModel t;
        t.source_model = parse_model(j.at("models").at("source").get<std::string>());
        t.target_model = parse_model(j.at("models").at("target").get<std::string>());
        t.roughness_poly = j.at("roughness_poly").get<std::vector<double>>();
        if (t.roughness_poly.empty() || t.roughness_poly.size() > 5)
            throw ConfigError("roughness_poly must have 1 to 5 coefficients");
        t.slope_coeffs = j.at("slope_coeffs").get<SlopeCoeffs>();
        const auto& dm = j.at("diffuse_map");
        if (dm.size() != 3) throw ConfigError("diffuse_map needs three channels");
        for (int c = 0; c < 3; ++c)
            t.diffuse_map[c] = {dm[c].at("scale").get<double>(), dm[c].at("offset").get<double>()};
        const auto r = j.at("domain").at("roughness").get<std::array<double, 2>>();
        const auto s = j.at("domain").at("specular").get<std::array<double, 2>>();
        t.domain = {r[0], r[1], s[0], s[1]};
        if (j.contains("residuals")) {
            const auto& res = j["residuals"];
            t.report.roughness_rmse = res.value("roughness_rmse", 0.0);
            t.report.slope_max_rel = res.value("slope_max_rel", 0.0);
            t.report.specular_rmse = res.value("specular_rmse", 0.0);
            if (res.contains("diffuse_rmse")) t.report.diffuse_rmse = res["diffuse_rmse"].get<std::array<double, 3>>();
            if (res.contains("levels")) t.report.levels = res["levels"].get<std::vector<double>>();
            if (res.contains("k_hat")) t.report.k_hat = res["k_hat"].get<std::vector<double>>();
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed transform: ") + e.what());
    }
}

inline void save_transform(const std::string& path, const TransformModel& t) {
    csv::write_file(path, to_json(t).dump(2) + "\n");
}

inline TransformModel load_transform(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("transform JSON: ") + e.what());
    }
    return transform_from_json(j);
}

// Plot data: the roughness curve and k(alpha), 256 samples each, plus the
// per-level slopes the fit was made from.
inline std::string roughness_curve_csv(const TransformModel& t) {
    std::string out = "alpha1,alpha2\n";
    for (int i = 0; i < 256; ++i) {
        const double a = std::max(i / 255.0, kRoughnessMin);
        out += csv::num(a) + "," + csv::num(t.roughness(a)) + "\n";
    }
    return out;
}

inline std::string slope_curve_csv(const TransformModel& t) {
    std::string out = "alpha,k\n";
    for (int i = 0; i < 256; ++i) {
        const double a = std::max(i / 255.0, kRoughnessMin);
        out += csv::num(a) + "," + csv::num(t.slope(a)) + "\n";
    }
    return out;
}

inline std::string slope_levels_csv(const TransformModel& t) {
    std::string out = "alpha,k_hat,k_fit\n";
    for (std::size_t i = 0; i < t.report.levels.size(); ++i)
        out += csv::num(t.report.levels[i]) + "," + csv::num(t.report.k_hat[i]) + "," +
               csv::num(t.slope(t.report.levels[i])) + "\n";
    return out;
}

// --- Kernel ridge baseline -------------------------------------------------------------

struct KernelRegressor {
    std::vector<double> in_mean, in_scale;
    Eigen::MatrixXd support;  // standardized inputs, one row per point
    Eigen::VectorXd weights;
    double gamma = 1;
    double lambda = 1e-6;
    double out_mean = 0;

    double predict(std::span<const double> x) const {
        double y = out_mean;
        for (Eigen::Index i = 0; i < support.rows(); ++i) {
            double d2 = 0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double z = (x[j] - in_mean[j]) / in_scale[j] - support(i, static_cast<Eigen::Index>(j));
                d2 += z * z;
            }
            y += weights(i) * std::exp(-gamma * d2);
        }
        return y;
    }
};

// RBF kernel ridge regression. Inputs are standardized; duplicate inputs
// are merged by averaging their outputs; gamma = 1 / (2 m^2) with m the
// median pairwise distance. A failed Cholesky factorisation raises lambda
// tenfold and appends a warning.
inline KernelRegressor fit_kernel_regressor(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                            double lambda = 1e-6, std::vector<std::string>* warnings = nullptr) {
    if (x.empty() || x.size() != y.size()) throw DimensionError("kernel regressor needs matching, non-empty data");
    std::map<std::vector<double>, std::pair<double, int>> merged;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto& m = merged[x[i]];
        m.first += y[i];
        ++m.second;
    }
    const std::size_t d = x[0].size();
    const auto n = static_cast<Eigen::Index>(merged.size());

    KernelRegressor kr;
    kr.lambda = lambda;
    kr.in_mean.assign(d, 0);
    kr.in_scale.assign(d, 0);
    for (const auto& [xi, _] : merged)
        for (std::size_t j = 0; j < d; ++j) kr.in_mean[j] += xi[j] / static_cast<double>(n);
    for (const auto& [xi, _] : merged)
        for (std::size_t j = 0; j < d; ++j) kr.in_scale[j] += std::pow(xi[j] - kr.in_mean[j], 2) / static_cast<double>(n);
    for (auto& s : kr.in_scale) s = s > 0 ? std::sqrt(s) : 1.0;

    kr.support.resize(n, static_cast<Eigen::Index>(d));
    Eigen::VectorXd target(n);
    Eigen::Index row = 0;
    for (const auto& [xi, acc] : merged) {
        for (std::size_t j = 0; j < d; ++j)
            kr.support(row, static_cast<Eigen::Index>(j)) = (xi[j] - kr.in_mean[j]) / kr.in_scale[j];
        target(row++) = acc.first / acc.second;
    }
    kr.out_mean = target.mean();
    target.array() -= kr.out_mean;

    Eigen::MatrixXd sq(n, n);
    std::vector<double> dists;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            sq(i, j) = (kr.support.row(i) - kr.support.row(j)).squaredNorm();
            if (j > i) dists.push_back(std::sqrt(sq(i, j)));
        }
    double median = 1;
    if (!dists.empty()) {
        std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2), dists.end());
        median = dists[dists.size() / 2] > 0 ? dists[dists.size() / 2] : 1.0;
    }
    kr.gamma = 1.0 / (2.0 * median * median);
    const Eigen::MatrixXd k = (-kr.gamma * sq.array()).exp().matrix();

    for (int attempt = 0; attempt < 16; ++attempt) {
        Eigen::MatrixXd a = k;
        a.diagonal().array() += kr.lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success) {
            kr.weights = llt.solve(target);
            if (kr.weights.allFinite()) return kr;
        }
        kr.lambda = kr.lambda > 0 ? kr.lambda * 10 : 1e-12;
        if (warnings) warnings->push_back("kernel system singular, ridge raised to " + csv::num(kr.lambda));
    }
    throw NumericError("kernel system stays singular");
}

struct KernelBaseline {
    ModelFamily source_model = ModelFamily::GGX;
    ModelFamily target_model = ModelFamily::GGX;
    KernelRegressor roughness;  // (alpha1, mean s1) -> alpha2
    KernelRegressor specular;   // (alpha1, s1_c) -> s2_c, channels pooled
    KernelRegressor diffuse;    // (d1_c, s1_c) -> d2_c, channels pooled
    std::vector<std::string> warnings;

    MaterialParams apply(const MaterialParams& in) const {
        MaterialParams out;
        const std::array<double, 2> ra{in.roughness, in.specular.mean()};
        out.roughness = std::clamp(roughness.predict(ra), kRoughnessMin, 1.0);
        for (int c = 0; c < 3; ++c) {
            const std::array<double, 2> s{in.roughness, in.specular[c]};
            const std::array<double, 2> dd{in.diffuse[c], in.specular[c]};
            out.specular[c] = specular.predict(s);
            out.diffuse[c] = diffuse.predict(dd);
        }
        return out;
    }
};

inline KernelBaseline fit_kernel_baseline(const RemapDatabase& db, double lambda = 1e-6) {
    const auto data = select_fit_rows(db);
    KernelBaseline kb;
    kb.source_model = db.source_model;
    kb.target_model = db.target_model;
    std::vector<std::vector<double>> xr, xs, xd;
    std::vector<double> yr, ys, yd;
    for (const auto& rows : data.by_level)
        for (const auto* r : rows) {
            const auto src = canonical(r->source);
            const auto dst = canonical(*r->target);
            xr.push_back({src.roughness, src.specular.mean()});
            yr.push_back(dst.roughness);
            for (int c = 0; c < 3; ++c) {
                xs.push_back({src.roughness, src.specular[c]});
                ys.push_back(dst.specular[c]);
                xd.push_back({src.diffuse[c], src.specular[c]});
                yd.push_back(dst.diffuse[c]);
            }
        }
    kb.roughness = fit_kernel_regressor(xr, yr, lambda, &kb.warnings);
    kb.specular = fit_kernel_regressor(xs, ys, lambda, &kb.warnings);
    kb.diffuse = fit_kernel_regressor(xd, yd, lambda, &kb.warnings);
    return kb;
}

inline MaterialParams apply_kernel(const KernelBaseline& kb, const MaterialParams& p) { return kb.apply(p); }

}  // namespace brdfremap
