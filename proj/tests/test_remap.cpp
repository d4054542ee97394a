#include <gtest/gtest.h>

#include "brdfremap/remap.hpp"

using namespace brdfremap;

namespace {

RemapOptions small_scene(int size = 40) {
    RemapOptions o;
    o.scene = SceneConfig::with_size(size, size);
    return o;
}

BrdfSpec sample_spec(ModelFamily m) {
    auto s = BrdfSpec::make(m);
    s.set_diffuse({0.35, 0.25, 0.15});
    if (has_specular_term(m)) s.set_specular({0.3, 0.2, 0.25}).set_roughness(0.2);
    return s;
}

BrdfSpec conductor(ModelFamily m, double f0, double alpha) {
    auto s = BrdfSpec::make(m);
    s.set_diffuse(Rgb(0.0)).set_specular(Rgb(f0)).set_roughness(alpha);
    return s;
}

}  // namespace

TEST(Remap, SelfRemapIsAFixedPoint) {
    for (auto m : kAllModels)
        for (auto scheme : {RemapScheme::Simple, RemapScheme::TwoStage, RemapScheme::ThreeStage}) {
            const auto src = sample_spec(m);
            const auto r = remap_uniform(src, m, scheme, small_scene(), src);
            EXPECT_EQ(r.target_spec, src) << model_name(m) << " " << scheme_name(scheme);
            EXPECT_EQ(r.l2, 0.0);
            EXPECT_EQ(r.mean_ssim, 1.0);
            EXPECT_EQ(static_cast<int>(r.stages.size()), stage_count(scheme));
        }
}

TEST(Remap, SelfRemapFromIorSpecUsesF0Form) {
    auto src = BrdfSpec::make(ModelFamily::GGX, SpecularParam::RealIor);
    src.set("ior", 1.6);
    const auto r = remap_uniform(src, ModelFamily::GGX, RemapScheme::TwoStage, small_scene(), src);
    EXPECT_EQ(r.target_spec.specular_param(), SpecularParam::F0);
    EXPECT_NEAR(specular_f0(r.target_spec).g, specular_f0(src).g, 1e-15);
    EXPECT_EQ(r.l2, 0.0);
}

TEST(Remap, LambertSourceForcesZeroSpecular) {
    auto src = BrdfSpec::make(ModelFamily::Lambert);
    src.set_diffuse({0.5, 0.2, 0.1});
    for (auto scheme : {RemapScheme::Simple, RemapScheme::TwoStage}) {
        const auto r = remap_uniform(src, ModelFamily::WardA, scheme, small_scene());
        const Rgb d = diffuse_of(r.target_spec), s = specular_f0(r.target_spec);
        for (int c = 0; c < 3; ++c) {
            EXPECT_NEAR(d[c], diffuse_of(src)[c], 1e-6);
            EXPECT_LT(s[c], 1e-3);
        }
        EXPECT_LT(r.l2, 1e-6);
        EXPECT_FALSE(r.flags.any());
    }
}

TEST(Remap, TrimmedWardSpecularNearOneHitsBound) {
    const auto src = conductor(ModelFamily::WardB, 0.9995, 0.2);
    const auto r = remap_uniform(src, ModelFamily::WardB, RemapScheme::TwoStage, small_scene(), src);
    EXPECT_TRUE(r.flags.hit_bound);
    EXPECT_NE(std::find(r.bound_params.begin(), r.bound_params.end(), "specular.r"), r.bound_params.end());

    // An unbounded Ward source that needs albedo above one.
    const auto bright = conductor(ModelFamily::WardA, 3.0, 0.2);
    EXPECT_TRUE(remap_uniform(bright, ModelFamily::WardB, RemapScheme::TwoStage, small_scene()).flags.hit_bound);
}

TEST(Remap, FresnelUpperBoundIsFlagged) {
    const auto r = remap_uniform(conductor(ModelFamily::WardA, 4.0, 0.1), ModelFamily::GGX, RemapScheme::TwoStage,
                                 small_scene());
    EXPECT_TRUE(r.flags.hit_bound);
    EXPECT_EQ(specular_f0(r.target_spec).r, 1.0);
}

TEST(Remap, ZeroLowerBoundIsNotAHit) {
    const auto r = remap_uniform(conductor(ModelFamily::WardA, 0.4, 0.2), ModelFamily::WardB, RemapScheme::TwoStage,
                                 small_scene());
    EXPECT_EQ(diffuse_of(r.target_spec), Rgb(0.0));
    EXPECT_FALSE(r.flags.hit_bound);
}

TEST(Remap, UnmatchedSpecularPassIsFlaggedNotFatal) {
    const auto r = remap_uniform(sample_spec(ModelFamily::GGX), ModelFamily::Lambert, RemapScheme::TwoStage,
                                 small_scene());
    EXPECT_TRUE(r.flags.unmatched_pass);
    EXPECT_EQ(r.stages.size(), 2u);
    auto lambert = BrdfSpec::make(ModelFamily::Lambert);
    EXPECT_FALSE(remap_uniform(lambert, ModelFamily::Lambert, RemapScheme::Simple, small_scene()).flags.unmatched_pass);
}

TEST(Remap, TwoStageDiffuseStageIgnoresSourceSpecular) {
    auto a = sample_spec(ModelFamily::WardA);
    auto b = a;
    b.set_specular({0.9, 0.1, 0.5}).set_roughness(0.45);
    const auto ra = remap_uniform(a, ModelFamily::GGX, RemapScheme::TwoStage, small_scene());
    const auto rb = remap_uniform(b, ModelFamily::GGX, RemapScheme::TwoStage, small_scene());
    EXPECT_EQ(ra.stages[0].x_final, rb.stages[0].x_final);
    EXPECT_EQ(diffuse_of(ra.target_spec), diffuse_of(rb.target_spec));
}

TEST(Remap, ThreeStageNeverIncreasesCost) {
    const auto src = sample_spec(ModelFamily::AshikhminShirley);
    const auto three = remap_uniform(src, ModelFamily::BlinnPhong, RemapScheme::ThreeStage, small_scene());
    ASSERT_EQ(three.stages.size(), 3u);
    EXPECT_LE(three.stages[2].final_cost, three.stages[2].initial_cost);

    // The joint stage starts at the two-stage answer.
    const auto two = remap_uniform(src, ModelFamily::BlinnPhong, RemapScheme::TwoStage, small_scene());
    const auto opt = small_scene();
    const auto ref = render(src, opt.scene);
    const auto seed_img = render(two.target_spec, opt.scene);
    EXPECT_NEAR(three.stages[2].initial_cost, 0.5 * std::pow(l2_distance(seed_img, ref), 2) * 3 * 40 * 40, 1e-9);
}

TEST(Remap, RejectsSeedOfWrongModel) {
    EXPECT_THROW(remap_uniform(sample_spec(ModelFamily::GGX), ModelFamily::WardA, RemapScheme::Simple, small_scene(),
                               sample_spec(ModelFamily::GGX)),
                 ConfigError);
}

TEST(Seed, DocumentedHeuristic) {
    const auto s = seed_spec(sample_spec(ModelFamily::WardA), ModelFamily::GGX);
    EXPECT_EQ(diffuse_of(s), Rgb(0.35, 0.25, 0.15));
    EXPECT_EQ(specular_f0(s), Rgb(0.5));
    EXPECT_EQ(roughness_of(s), 0.2);
    auto lambert = BrdfSpec::make(ModelFamily::Lambert);
    EXPECT_EQ(seed_spec(lambert, ModelFamily::GGX).get("roughness"), 0.3);
}

TEST(RoundTrip, ThroughOwnModelIsExact) {
    const auto src = sample_spec(ModelFamily::Beckmann);
    const auto rt = round_trip(src, ModelFamily::Beckmann, RemapScheme::TwoStage, small_scene());
    EXPECT_LT(rt.max_deviation(), 1e-4);
}

TEST(RoundTrip, BoundHitIsReportedWithoutThrowing) {
    const auto rt = round_trip(conductor(ModelFamily::WardA, 4.0, 0.1), ModelFamily::GGX, RemapScheme::TwoStage,
                               small_scene());
    EXPECT_TRUE(rt.flags.hit_bound);
    EXPECT_GT(rt.max_deviation("f0"), 0.1);
    EXPECT_EQ(rt.deviation.size(), 7u);
}

TEST(Sweep, PointsFollowGridOrder) {
    ParamSweep sw{BrdfSpec::make(ModelFamily::GGX), {{"roughness", {0.1, 0.2}}, {"specular", {0.01, 0.02, 0.03}}}};
    const auto pts = sw.points();
    ASSERT_EQ(pts.size(), 6u);
    EXPECT_EQ(pts[0].get("roughness"), 0.1);
    EXPECT_EQ(pts[2].get("specular.b"), 0.03);
    EXPECT_EQ(pts[3].get("roughness"), 0.2);
    EXPECT_EQ(pts[3].get("specular.g"), 0.01);
    EXPECT_THROW((ParamSweep{BrdfSpec::make(ModelFamily::GGX), {{"roughness", {2.0}}}}.points()), DomainError);
}

TEST(Scan, SinglePointAndPerRowFailures) {
    ParamSweep one{conductor(ModelFamily::WardA, 0.3, 0.2), {{"roughness", {0.2}}}};
    const auto t = stability_scan(one, ModelFamily::WardB, RemapScheme::TwoStage, small_scene(24));
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_TRUE(t.rows[0].result.has_value());

    auto bad = small_scene(24);
    bad.scene.vertical_fov_deg = 170;
    ParamSweep two{conductor(ModelFamily::WardA, 0.3, 0.2), {{"roughness", {0.2, 0.3}}}};
    const auto f = stability_scan(two, ModelFamily::WardB, RemapScheme::TwoStage, bad);
    ASSERT_EQ(f.rows.size(), 2u);
    for (const auto& r : f.rows) {
        EXPECT_FALSE(r.result.has_value());
        EXPECT_FALSE(r.error.empty());
        EXPECT_TRUE(r.flagged());
    }
}

TEST(Scan, ConductorSweepIsMonotone) {
    ParamSweep sw{conductor(ModelFamily::WardA, 0.1, 0.15), {{"specular", {0.1, 0.25, 0.4, 0.55, 0.7}}}};
    const auto t = stability_scan(sw, ModelFamily::GGX, RemapScheme::TwoStage, small_scene(32));
    double prev = -1;
    for (const auto& r : t.rows) {
        ASSERT_TRUE(r.result);
        if (r.flagged()) continue;
        const double s = specular_f0(r.result->target_spec).r;
        EXPECT_GE(s, prev);
        prev = s;
    }
}

TEST(Scan, JumpsAndSsimDropsAreFlagged) {
    ScanTable t;
    t.axes = {{"ior", {1, 2, 3, 4, 5, 6}}};
    const double spec[] = {0.10, 0.11, 0.12, 0.40, 0.14, 0.15};
    const double score[] = {0.999, 0.999, 0.999, 0.97, 0.999, 0.999};
    for (int i = 0; i < 6; ++i) {
        RemapResult r;
        r.target_spec = conductor(ModelFamily::GGX, spec[i], 0.2);
        r.mean_ssim = score[i];
        t.rows.push_back({r.target_spec, r, {}});
    }
    flag_discontinuities(t);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(t.rows[i].result->flags.suspected_local_minimum, i == 3) << i;

    t.rows[3].result->flags = {};
    t.rows[3].result->target_spec.set_specular(Rgb(0.13));
    t.rows[3].result->mean_ssim = 0.9;
    flag_discontinuities(t);
    EXPECT_TRUE(t.rows[3].result->flags.suspected_local_minimum);
    EXPECT_FALSE(t.rows[2].result->flags.suspected_local_minimum);
}
