#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "brdfremap/svbrdf.hpp"

using namespace brdfremap;
namespace fs = std::filesystem;

namespace {

TransformModel ward_to_ggx() {
    TransformModel t;
    t.source_model = ModelFamily::WardA;
    t.target_model = ModelFamily::GGX;
    t.roughness_poly = {0.01, 0.8, 0.1};
    t.slope_coeffs = {0.6, 0.5, 4.0, 0.0, 1.0};
    t.diffuse_map = {AffineMap{0.95, 0.0}, AffineMap{0.95, 0.0}, AffineMap{0.95, 0.0}};
    return t;
}

SvbrdfMaps random_maps(int w, int h, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    auto m = SvbrdfMaps::uniform(ModelFamily::WardA, w, h, {});
    for (std::size_t i = 0; i < m.texels(); ++i) {
        m.diffuse[i] = {u(rng), u(rng), u(rng)};
        m.specular[i] = Rgb(0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng));
        m.roughness[i] = 0.05 + 0.9 * u(rng);
        m.normals[i] = {0.4 + 0.2 * u(rng), 0.4 + 0.2 * u(rng), 1.0};
    }
    return m;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

fs::path temp_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / "brdfremap_svbrdf" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(RemapMaps, IdentityIsBitExact) {
    const auto m = random_maps(17, 9, 1);
    const auto out = remap_maps(m, TransformModel::identity(ModelFamily::WardA));
    EXPECT_EQ(out.diffuse, m.diffuse);
    EXPECT_EQ(out.specular, m.specular);
    EXPECT_EQ(out.roughness, m.roughness);
    EXPECT_EQ(out.normals, m.normals);
}

TEST(RemapMaps, ConstantRoughnessGivesOneGlobalSlope) {
    auto m = random_maps(16, 16, 2);
    std::fill(m.roughness.begin(), m.roughness.end(), 0.3);
    const auto t = ward_to_ggx();
    const auto out = remap_maps(m, t);
    const double k = t.slope(0.3);
    for (std::size_t i = 0; i < m.texels(); ++i) {
        EXPECT_EQ(out.roughness[i], out.roughness[0]);
        for (int c = 0; c < 3; ++c) EXPECT_EQ(out.specular[i][c], m.specular[i][c] * k);
    }
}

TEST(RemapMaps, SpecularInheritsRoughnessDetail) {
    auto m = random_maps(32, 32, 3);
    std::fill(m.specular.begin(), m.specular.end(), Rgb(0.3));
    const auto out = remap_maps(m, ward_to_ggx());
    std::vector<double> s;
    for (const auto& c : out.specular) s.push_back(c.g);
    EXPECT_GT(std::abs(pearson(m.roughness, s)), 0.3);
}

TEST(RemapMaps, TexelLocalAndThreadIndependent) {
    const auto m = random_maps(23, 11, 4);
    const auto t = ward_to_ggx();
    const auto a = remap_maps(m, t, nullptr, 1);
    const auto b = remap_maps(m, t, nullptr, 5);
    EXPECT_EQ(a.specular, b.specular);
    EXPECT_EQ(a.roughness, b.roughness);

    auto flipped = m;
    std::reverse(flipped.diffuse.begin(), flipped.diffuse.end());
    std::reverse(flipped.specular.begin(), flipped.specular.end());
    std::reverse(flipped.roughness.begin(), flipped.roughness.end());
    std::reverse(flipped.normals.begin(), flipped.normals.end());
    auto c = remap_maps(flipped, t);
    std::reverse(c.specular.begin(), c.specular.end());
    std::reverse(c.roughness.begin(), c.roughness.end());
    EXPECT_EQ(c.specular, a.specular);
    EXPECT_EQ(c.roughness, a.roughness);
}

TEST(RemapMaps, OutOfGamutValuesAreClampedAndCounted) {
    auto t = ward_to_ggx();
    t.slope_coeffs = {3.0, 0, 0, 0, 0};
    t.diffuse_map[0] = {1.0, -0.5};
    auto m = SvbrdfMaps::uniform(ModelFamily::WardA, 4, 4, {Rgb(0.2), Rgb(0.1), 0.3});
    m.specular[5] = Rgb(0.6);
    RemapStats stats;
    const auto out = remap_maps(m, t, &stats);
    EXPECT_EQ(stats.texels, 16u);
    EXPECT_EQ(stats.clamped_specular, 1u);
    EXPECT_EQ(stats.clamped_diffuse, 16u);
    EXPECT_EQ(out.specular[5], Rgb(1.0));
    EXPECT_EQ(out.diffuse[0].r, 0.0);
}

TEST(RemapMaps, Errors) {
    auto m = random_maps(4, 4, 5);
    m.roughness.pop_back();
    EXPECT_THROW(remap_maps(m, ward_to_ggx()), DimensionError);
    EXPECT_THROW(remap_maps(random_maps(4, 4, 5), TransformModel::identity(ModelFamily::GGX)), ConfigError);
}

TEST(RemapMaps, ChainedTransformsCompose) {
    auto second = TransformModel::identity(ModelFamily::GGX);
    second.slope_coeffs = {0.5, 0, 0, 0, 0};
    const auto m = random_maps(8, 8, 6);
    const auto direct = remap_maps(m, ward_to_ggx());
    const auto chained = remap_maps(m, chain({ward_to_ggx(), second}));
    for (std::size_t i = 0; i < m.texels(); ++i) EXPECT_EQ(chained.specular[i], direct.specular[i] * 0.5);
}

TEST(Tonemap, IdentityCurveAndLookup) {
    const auto id = tonemap_curve(TransformModel::identity(ModelFamily::GGX));
    ASSERT_EQ(id.x.size(), 256u);
    for (std::size_t i = 0; i < 256; ++i) EXPECT_EQ(id.y[i], id.x[i]);

    const auto t = ward_to_ggx();
    const auto curve = tonemap_curve(t);
    for (std::size_t i = 1; i < 256; ++i) EXPECT_GE(curve.y[i], curve.y[i - 1]);
    const auto m = random_maps(32, 32, 7);
    const auto out = remap_maps(m, t);
    for (std::size_t i = 0; i < m.texels(); ++i) EXPECT_NEAR(out.roughness[i], curve.lookup(m.roughness[i]), 1e-3);
}

TEST(Preview, BlackAndUniformCases) {
    PlaneScene scene;
    const auto ward = SvbrdfMaps::uniform(ModelFamily::WardA, 16, 16, {Rgb(0.0), Rgb(0.0), 0.3});
    for (double v : preview_render(ward, scene).pixels) EXPECT_EQ(v, 0.0);
    // Schlick keeps a (1 - cos)^5 grazing term at F0 = 0; it is far below any display step.
    const auto ggx = SvbrdfMaps::uniform(ModelFamily::GGX, 16, 16, {Rgb(0.0), Rgb(0.0), 0.3});
    for (double v : preview_render(ggx, scene).pixels) EXPECT_LT(v, 1e-12);

    const MaterialParams p{{0.3, 0.2, 0.1}, Rgb(0.5), 0.25};
    const auto maps = SvbrdfMaps::uniform(ModelFamily::GGX, 24, 24, p);
    scene.width = scene.height = 24;
    for (auto pass : {RenderPass::Full, RenderPass::SpecularOnly}) {
        const auto a = preview_render(maps, scene, pass);
        const auto b = render_plane(to_spec(ModelFamily::GGX, p), scene, pass);
        for (std::size_t i = 0; i < a.pixels.size(); ++i) EXPECT_NEAR(a.pixels[i], b.pixels[i], 1e-6);
    }
}

TEST(Preview, NormalsPerturbShading) {
    auto m = SvbrdfMaps::uniform(ModelFamily::GGX, 8, 8, {Rgb(0.3), Rgb(0.2), 0.2});
    const auto flat = preview_render(m, PlaneScene{});
    m.normals[9] = {0.8, 0.5, 0.8};
    const auto bumped = preview_render(m, PlaneScene{});
    EXPECT_NE(flat.at(1, 1), bumped.at(1, 1));
    EXPECT_EQ(flat.at(5, 5), bumped.at(5, 5));
}

TEST(Manifest, ParseErrors) {
    EXPECT_NO_THROW(parse_manifest(
        "model = WardA\ndiffuse = d.png\nspecular = s.png\nroughness = r.pfm\nnormals = n.png\n"));
    EXPECT_THROW(parse_manifest("diffuse = d.png\n"), ParseError);
    EXPECT_THROW(parse_manifest("model = Foo\n"), ParseError);
    EXPECT_THROW(parse_manifest("model = GGX\nbogus = 1\n"), ParseError);
    EXPECT_THROW(parse_manifest("model = GGX\ndiffuse = d.png\n"), ParseError);
    EXPECT_THROW(parse_manifest("model = GGX\ndiffuse.transfer = gamma\n"), ParseError);
}

TEST(MaterialIo, PngInputsRoundTripThroughPfmOutputs) {
    const auto in_dir = temp_dir("in");
    const int w = 4, h = 3;
    PngData diffuse{w, h, 3, 8, {}}, spec{w, h, 3, 16, {}}, rough{w, h, 1, 16, {}}, normals{w, h, 3, 8, {}};
    for (int i = 0; i < w * h; ++i) {
        for (int c = 0; c < 3; ++c) {
            diffuse.samples.push_back(static_cast<std::uint16_t>(20 * i + c));
            spec.samples.push_back(static_cast<std::uint16_t>(1000 * i + 7 * c));
        }
        rough.samples.push_back(static_cast<std::uint16_t>(3000 + 5000 * i));
        normals.samples.insert(normals.samples.end(), {128, 128, 255});
    }
    write_png((in_dir / "diffuse.png").string(), diffuse);
    write_png((in_dir / "specular.png").string(), spec);
    write_png((in_dir / "rough.png").string(), rough);
    write_png((in_dir / "normals.png").string(), normals);
    csv::write_file((in_dir / kManifestName).string(),
                    "model = WardA\ndiffuse = diffuse.png\nspecular = specular.png\nspecular.transfer = linear\n"
                    "roughness = rough.png\nnormals = normals.png\n");

    const auto m = load_material(in_dir.string());
    EXPECT_EQ(m.model, ModelFamily::WardA);
    EXPECT_NEAR(m.diffuse[2].b, srgb_decode(42 / 255.0), 1e-12);
    EXPECT_NEAR(m.specular[3].g, 3007 / 65535.0, 1e-12);
    EXPECT_NEAR(m.roughness[1], 8000 / 65535.0, 1e-12);

    const auto out_dir = temp_dir("out");
    const auto remapped = remap_maps(m, ward_to_ggx());
    save_material(out_dir.string(), remapped, manifest_normals_path(in_dir.string()));
    const auto back = load_material(out_dir.string());
    EXPECT_EQ(back.model, ModelFamily::GGX);
    for (std::size_t i = 0; i < m.texels(); ++i) {
        EXPECT_NEAR(back.roughness[i], remapped.roughness[i], 1e-6);
        EXPECT_NEAR(back.specular[i].b, remapped.specular[i].b, 1e-6);
    }
    std::ifstream a(in_dir / "normals.png", std::ios::binary), b(out_dir / "normals.png", std::ios::binary);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST(MaterialIo, MismatchedResolutionsAreRejected) {
    const auto dir = temp_dir("bad");
    write_pfm((dir / "a.pfm").string(), RenderedImage::zeros(4, 4));
    write_pfm((dir / "b.pfm").string(), RenderedImage::zeros(4, 5));
    csv::write_file((dir / kManifestName).string(),
                    "model = GGX\ndiffuse = a.pfm\nspecular = a.pfm\nroughness = a.pfm\nnormals = b.pfm\n");
    EXPECT_THROW(load_material(dir.string()), DimensionError);
}
