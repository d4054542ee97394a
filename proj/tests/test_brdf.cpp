#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "brdfremap/brdf.hpp"

using namespace brdfremap;

namespace {

// Literal complex evaluation of (c-1)(c*-1) / ((c+1)(c*+1)).
double f0_complex_oracle(double n, double k) {
    const std::complex<double> c(n, k);
    const std::complex<double> one(1.0, 0.0);
    const auto v = ((c - one) * (std::conj(c) - one)) / ((c + one) * (std::conj(c) + one));
    return v.real();
}

Vec3 random_hemisphere(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double z = u(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * kPi * u(rng);
    return {r * std::cos(phi), r * std::sin(phi), z};
}

BrdfSpec random_spec(ModelFamily m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto spec = BrdfSpec::make(m);
    spec.set_diffuse({u(rng), u(rng), u(rng)});
    if (has_specular_term(m)) {
        spec.set_specular({u(rng), u(rng), u(rng)});
        spec.set_roughness(0.02 + 0.98 * u(rng));
    }
    spec.validate();
    return spec;
}

// Directional albedo by midpoint quadrature over the incident hemisphere.
Rgb directional_albedo(const BrdfSpec& spec, double theta_o, int n_theta, int n_phi) {
    const ShadingParams p = resolve(spec);
    const Vec3 n{0, 0, 1};
    const Vec3 wo{std::sin(theta_o), 0, std::cos(theta_o)};
    const double dt = 0.5 * kPi / n_theta, dp = 2.0 * kPi / n_phi;
    Rgb sum;
    for (int i = 0; i < n_theta; ++i) {
        const double t = (i + 0.5) * dt;
        const double w = std::cos(t) * std::sin(t) * dt * dp;
        for (int j = 0; j < n_phi; ++j) {
            const double ph = (j + 0.5) * dp;
            const Vec3 wi{std::sin(t) * std::cos(ph), std::sin(t) * std::sin(ph), std::cos(t)};
            sum += eval(p, {wi, wo, n}) * w;
        }
    }
    return sum;
}

// Simpson integration of D(theta) cos(theta) sin(theta) over [0, pi/2], times 2 pi.
template <typename D>
double projected_ndf_integral(D d, int intervals = 200000) {
    const double h = 0.5 * kPi / intervals;
    auto f = [&](double t) { return d(std::cos(t)) * std::cos(t) * std::sin(t); };
    double s = f(0.0) + f(0.5 * kPi);
    for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return 2.0 * kPi * s * h / 3.0;
}

}  // namespace

TEST(Fresnel, RealIorExamples) {
    EXPECT_EQ(f0_from_ior(FresnelSpec::real_ior(1.0)).r, 0.0);
    EXPECT_NEAR(f0_from_ior(FresnelSpec::real_ior(1.5)).g, 0.04, 1e-15);
}

TEST(Fresnel, ImaginaryUnitIsPerfectReflector) {
    const Rgb f0 = f0_from_ior(FresnelSpec::complex_ior(Rgb(0.0), Rgb(1.0)));
    EXPECT_NEAR(f0.r, 1.0, 1e-15);
    EXPECT_NEAR(f0.b, 1.0, 1e-15);
}

TEST(Fresnel, MatchesComplexArithmetic) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> n(0.0, 4.0), k(0.0, 8.0);
    for (int i = 0; i < 200; ++i) {
        const Rgb eta{n(rng), n(rng), n(rng)}, kappa{k(rng), k(rng), k(rng)};
        const Rgb f0 = f0_from_ior(FresnelSpec::complex_ior(eta, kappa));
        for (int c = 0; c < 3; ++c) {
            const double ref = f0_complex_oracle(eta[c], kappa[c]);
            EXPECT_LE(std::abs(f0[c] - ref), 1e-12 * std::max(ref, 1e-300));
            EXPECT_GE(f0[c], 0.0);
            EXPECT_LE(f0[c], 1.0);
        }
    }
}

TEST(Fresnel, RealIorIsComplexWithZeroExtinction) {
    for (double c : {1.0, 1.2, 1.5, 2.4, 10.0})
        EXPECT_NEAR(f0_from_ior(FresnelSpec::real_ior(c)).r, f0_complex_oracle(c, 0.0), 1e-15);
}

TEST(Fresnel, RejectsNonPhysicalInput) {
    EXPECT_THROW(f0_from_ior(FresnelSpec::real_ior(0.9)), DomainError);
    EXPECT_THROW(f0_from_ior(FresnelSpec::complex_ior(Rgb(-0.1), Rgb(1.0))), DomainError);
    EXPECT_THROW(f0_from_ior(FresnelSpec::complex_ior(Rgb(1.0), Rgb(-1.0))), DomainError);
    EXPECT_THROW(f0_from_ior(FresnelSpec::direct(Rgb(1.5))), DomainError);
    EXPECT_EQ(f0_from_ior(FresnelSpec::direct({0.1, 0.2, 0.3})), Rgb(0.1, 0.2, 0.3));
}

TEST(BrdfSpec, InvariantsHoldForEveryModel) {
    for (auto m : kAllModels) {
        for (auto sp : {SpecularParam::F0, SpecularParam::RealIor, SpecularParam::ComplexIor}) {
            const auto spec = BrdfSpec::make(m, sp);
            EXPECT_NO_THROW(spec.validate());
            bool saw_diffuse = false;
            for (const auto& p : spec.params()) {
                EXPECT_GE(p.lower, 0.0) << p.name;
                saw_diffuse |= p.term == Term::Diffuse;
            }
            EXPECT_TRUE(saw_diffuse);
            if (has_specular_term(m)) {
                EXPECT_EQ(spec.param(kRoughnessName).lower, kRoughnessMin);
                EXPECT_EQ(spec.param(kRoughnessName).term, Term::Specular);
            }
        }
    }
}

TEST(BrdfSpec, ValidateRejectsOutOfBounds) {
    auto spec = BrdfSpec::make(ModelFamily::GGX);
    spec.set_roughness(0.0);
    EXPECT_THROW(spec.validate(), DomainError);
    spec.set_roughness(0.5).set("specular.g", 1.2);
    EXPECT_THROW(spec.validate(), DomainError);
    spec.set("specular.g", std::nan(""));
    EXPECT_THROW(resolve(spec), DomainError);
    EXPECT_THROW(spec.get("nonexistent"), DomainError);
}

TEST(BrdfSpec, IorParameterizationResolvesToF0) {
    auto spec = BrdfSpec::make(ModelFamily::AshikhminShirley, SpecularParam::RealIor);
    spec.set(kIorName, 1.5);
    EXPECT_NEAR(specular_f0(spec).r, 0.04, 1e-15);
    auto metal = BrdfSpec::make(ModelFamily::GGX, SpecularParam::ComplexIor);
    EXPECT_NEAR(specular_f0(metal).g, f0_complex_oracle(0.2, 3.0), 1e-15);
}

TEST(Eval, LambertIsOneOverPi) {
    auto spec = BrdfSpec::make(ModelFamily::Lambert);
    spec.set_diffuse(Rgb(1.0));
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const Rgb f = eval_brdf(spec, {random_hemisphere(rng), random_hemisphere(rng), {0, 0, 1}});
        EXPECT_DOUBLE_EQ(f.r, kInvPi);
        EXPECT_DOUBLE_EQ(f.b, kInvPi);
    }
}

TEST(Eval, BelowHorizonIsZero) {
    std::mt19937_64 rng(5);
    const Vec3 wi = normalize(Vec3{std::sqrt(0.75), 0, -0.5});
    for (auto m : kAllModels) {
        const auto spec = random_spec(m, rng);
        EXPECT_EQ(eval_brdf(spec, {wi, {0, 0, 1}, {0, 0, 1}}), Rgb());
        EXPECT_EQ(eval_brdf(spec, {{0, 0, 1}, wi, {0, 0, 1}}), Rgb());
    }
}

TEST(Eval, ComponentsSumExactly) {
    std::mt19937_64 rng(11);
    for (auto m : kAllModels) {
        for (int i = 0; i < 50; ++i) {
            const auto spec = random_spec(m, rng);
            const ShadingGeometry g{random_hemisphere(rng), random_hemisphere(rng), {0, 0, 1}};
            const Rgb d = eval_brdf_component(spec, g, Component::Diffuse);
            const Rgb s = eval_brdf_component(spec, g, Component::Specular);
            EXPECT_EQ(eval_brdf(spec, g), d + s);
        }
    }
}

TEST(Eval, MissingTermsEvaluateToZero) {
    const ShadingGeometry g{{0, 0, 1}, normalize(Vec3{0.3, 0, 1}), {0, 0, 1}};
    EXPECT_EQ(eval_brdf_component(BrdfSpec::make(ModelFamily::Lambert), g, Component::Specular), Rgb());
    auto ward = BrdfSpec::make(ModelFamily::WardA);
    ward.set_diffuse(Rgb(0.0)).set_specular(Rgb(0.3));
    EXPECT_EQ(eval_brdf_component(ward, g, Component::Diffuse), Rgb());
}

TEST(Eval, ReciprocityAllModels) {
    std::mt19937_64 rng(1234);
    for (auto m : kAllModels) {
        for (int i = 0; i < 1000; ++i) {
            const auto spec = random_spec(m, rng);
            const Vec3 a = random_hemisphere(rng), b = random_hemisphere(rng);
            const Rgb f1 = eval_brdf(spec, {a, b, {0, 0, 1}});
            const Rgb f2 = eval_brdf(spec, {b, a, {0, 0, 1}});
            for (int c = 0; c < 3; ++c) {
                ASSERT_TRUE(std::isfinite(f1[c]));
                ASSERT_GE(f1[c], 0.0);
                EXPECT_LE(std::abs(f1[c] - f2[c]), 1e-9 * std::max(1.0, std::abs(f1[c]))) << model_name(m);
            }
        }
    }
}

TEST(Microfacet, DistributionsAreNormalized) {
    for (double a : {0.02, 0.1, 0.3, 0.6, 1.0}) {
        EXPECT_NEAR(projected_ndf_integral([a](double c) { return microfacet::ggx_d(c, a); }), 1.0, 1e-3) << a;
        EXPECT_NEAR(projected_ndf_integral([a](double c) { return microfacet::beckmann_d(c, a); }), 1.0, 1e-3) << a;
    }
}

TEST(Eval, EnergyBoundedForUnitSpecular) {
    // Outgoing directions up to 60 degrees; classic Ward normalizations
    // diverge towards grazing outgoing angles.
    for (auto m : kAllModels) {
        if (!has_specular_term(m)) continue;
        for (double a : {0.05, 0.2, 0.5, 1.0}) {
            auto spec = BrdfSpec::make(m);
            spec.set_diffuse(Rgb(0.0)).set_specular(Rgb(1.0)).set_roughness(a);
            for (double theta_deg : {0.0, 30.0, 60.0}) {
                const int nt = a < 0.1 ? 1200 : 300;
                const Rgb alb = directional_albedo(spec, deg_to_rad(theta_deg), nt, 4 * nt);
                EXPECT_LE(alb.r, 1.05) << model_name(m) << " alpha=" << a << " theta=" << theta_deg;
            }
        }
    }
    auto lambert = BrdfSpec::make(ModelFamily::Lambert);
    lambert.set_diffuse(Rgb(1.0));
    EXPECT_NEAR(directional_albedo(lambert, 0.3, 400, 800).g, 1.0, 1e-4);
}

TEST(Eval, WardVariantsDifferAtSpecularPeak) {
    // Mirror configuration at 60 degrees incidence.
    const double t = deg_to_rad(60.0);
    const ShadingGeometry g{{std::sin(t), 0, std::cos(t)}, {-std::sin(t), 0, std::cos(t)}, {0, 0, 1}};
    auto a = BrdfSpec::make(ModelFamily::WardA);
    a.set_diffuse(Rgb(0.0)).set_specular(Rgb(0.5)).set_roughness(0.2);
    auto b = BrdfSpec::make(ModelFamily::WardB);
    b.set_values(a.values());
    const double fa = eval_brdf(a, g).r, fb = eval_brdf(b, g).r;
    EXPECT_GT(std::abs(fa - fb) / fa, 0.05);
}

TEST(Eval, WardBTrimsSpecularAboveOne) {
    const ShadingGeometry g{{0, 0, 1}, {0, 0, 1}, {0, 0, 1}};
    auto b = BrdfSpec::make(ModelFamily::WardB);
    b.set_diffuse(Rgb(0.0)).set_specular(Rgb(1.0));
    const Rgb at_one = eval_brdf(b, g);
    b.set_specular(Rgb(3.0));
    EXPECT_EQ(eval_brdf(b, g), at_one);
    auto a = BrdfSpec::make(ModelFamily::WardA);
    a.set_diffuse(Rgb(0.0)).set_specular(Rgb(1.0));
    const Rgb wa1 = eval_brdf(a, g);
    a.set_specular(Rgb(3.0));
    EXPECT_NEAR(eval_brdf(a, g).r, 3.0 * wa1.r, 1e-12 * wa1.r);
}
