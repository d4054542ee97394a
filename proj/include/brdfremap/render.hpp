#pragma once

// Deterministic direct-lighting renderer for the comparison scene: a sphere
// lit by a single point light, seen through a pinhole camera. One primary
// ray per pixel, analytic intersection, no anti-aliasing. Each pixel is a
// pure function of its coordinates, so the output does not depend on the
// number of worker threads.

#include "brdfremap/brdf.hpp"
#include "brdfremap/image.hpp"
#include "brdfremap/parallel.hpp"

namespace brdfremap {

// Camera-to-origin distance 8, sphere radius 2: the front pole sits 6 units
// from a headlight. This intensity gives a peak diffuse radiance of 0.8 for
// a white Lambertian sphere.
inline constexpr double kDefaultLightIntensity = 0.8 * kPi * 36.0;

enum class LightMode { Headlight, Oblique };

struct LightConfig {
    LightMode mode = LightMode::Headlight;
    double theta_deg = 0.0;    // polar angle from the view axis (Oblique)
    double azimuth_deg = 0.0;  // rotation about the view axis, 0 = towards +right
    Rgb intensity = Rgb(kDefaultLightIntensity);  // radiant intensity, W/sr
    double distance = 8.0;  // from the look-at point (Oblique)

    static LightConfig headlight() { return {}; }
    static LightConfig oblique(double theta_deg, double azimuth_deg = 0.0) {
        LightConfig l;
        l.mode = LightMode::Oblique;
        l.theta_deg = theta_deg;
        l.azimuth_deg = azimuth_deg;
        return l;
    }

    void validate() const {
        if (!(intensity.r >= 0 && intensity.g >= 0 && intensity.b >= 0) || !intensity.is_finite())
            throw ConfigError("light intensity must be finite and >= 0");
        if (mode == LightMode::Oblique && !(theta_deg > 0.0 && theta_deg < 90.0))
            throw ConfigError("oblique light angle must lie in (0, 90) degrees");
        if (mode == LightMode::Oblique && !(distance > 0.0)) throw ConfigError("light distance must be positive");
    }
};

struct SceneConfig {
    double sphere_radius = 2.0;
    Vec3 sphere_center{0, 0, 0};
    Vec3 camera_position{0, 0, 8};
    Vec3 camera_look_at{0, 0, 0};
    double vertical_fov_deg = 32.0;
    LightConfig light;
    int width = 512;
    int height = 512;

    static SceneConfig with_size(int w, int h) {
        SceneConfig s;
        s.width = w;
        s.height = h;
        return s;
    }

    void validate() const {
        if (width <= 0 || height <= 0) throw ConfigError("image size must be positive");
        if (!(sphere_radius > 0)) throw ConfigError("sphere radius must be positive");
        if (!(vertical_fov_deg > 0 && vertical_fov_deg < 180)) throw ConfigError("fov must lie in (0, 180)");
        const double dist = length(camera_position - sphere_center);
        if (dist <= sphere_radius) throw ConfigError("camera lies inside the sphere");
        const double subtended = 2.0 * std::asin(sphere_radius / dist);
        if (subtended < 0.6 * deg_to_rad(vertical_fov_deg))
            throw ConfigError("sphere covers less than 60% of the image height");
        if (length(camera_look_at - camera_position) == 0.0) throw ConfigError("degenerate camera direction");
        light.validate();
    }
};

struct CameraFrame {
    Vec3 origin, forward, right, up;
};

inline CameraFrame camera_frame(const Vec3& position, const Vec3& look_at) {
    const Vec3 forward = normalize(look_at - position);
    Vec3 world_up{0, 1, 0};
    if (std::abs(dot(forward, world_up)) > 0.999) world_up = {0, 0, 1};
    const Vec3 right = normalize(cross(forward, world_up));
    return {position, forward, right, cross(right, forward)};
}

// World-space light position for a camera frame and look-at point.
inline Vec3 light_position(const LightConfig& light, const CameraFrame& cam, const Vec3& look_at) {
    if (light.mode == LightMode::Headlight) return cam.origin;
    const double t = deg_to_rad(light.theta_deg);
    const double p = deg_to_rad(light.azimuth_deg);
    const Vec3 dir = std::sin(t) * std::cos(p) * cam.right + std::sin(t) * std::sin(p) * cam.up +
                     std::cos(t) * (-cam.forward);
    return look_at + light.distance * dir;
}

// Reflected radiance at a surface point under a point light. Full is
// assembled as diffuse + specular radiance so pass decomposition is exact.
inline Rgb shade_point(const ShadingParams& p, const Vec3& point, const Vec3& normal, const Vec3& eye,
                       const Vec3& light_pos, const Rgb& intensity, RenderPass pass) {
    const Vec3 to_light = light_pos - point;
    const double d2 = dot(to_light, to_light);
    const ShadingGeometry g{normalize(to_light), normalize(eye - point), normal};
    const double cos_i = dot(g.wi, normal);
    if (cos_i <= 0.0 || dot(g.wo, normal) <= 0.0) return {};
    const Rgb irradiance = intensity * (cos_i / d2);
    Rgb out;
    if (pass != RenderPass::SpecularOnly) out = eval_component(p, g, Component::Diffuse) * irradiance;
    if (pass != RenderPass::DiffuseOnly) out += eval_component(p, g, Component::Specular) * irradiance;
    return out;
}

inline RenderedImage render(const ShadingParams& params, const SceneConfig& scene, RenderPass pass,
                            unsigned threads = 0) {
    scene.validate();
    const CameraFrame cam = camera_frame(scene.camera_position, scene.camera_look_at);
    const Vec3 light_pos = light_position(scene.light, cam, scene.camera_look_at);
    const double tan_half = std::tan(0.5 * deg_to_rad(scene.vertical_fov_deg));
    const double aspect = static_cast<double>(scene.width) / scene.height;
    const double r2 = scene.sphere_radius * scene.sphere_radius;

    auto img = RenderedImage::zeros(scene.width, scene.height, pass);
    parallel_for(static_cast<std::size_t>(scene.height), threads, [&](std::size_t row) {
        const int y = static_cast<int>(row);
        const double sy = (1.0 - 2.0 * (y + 0.5) / scene.height) * tan_half;
        for (int x = 0; x < scene.width; ++x) {
            const double sx = (2.0 * (x + 0.5) / scene.width - 1.0) * tan_half * aspect;
            const Vec3 dir = normalize(cam.forward + sx * cam.right + sy * cam.up);
            const Vec3 oc = cam.origin - scene.sphere_center;
            const double b = dot(oc, dir);
            const double disc = b * b - (dot(oc, oc) - r2);
            if (disc < 0.0) continue;
            const double t = -b - std::sqrt(disc);
            if (t <= 0.0) continue;
            const Vec3 hit = cam.origin + t * dir;
            const Vec3 n = normalize(hit - scene.sphere_center);
            img.set(x, y, shade_point(params, hit, n, cam.origin, light_pos, scene.light.intensity, pass));
        }
    });
    return img;
}

inline RenderedImage render(const BrdfSpec& spec, const SceneConfig& scene, RenderPass pass = RenderPass::Full,
                            unsigned threads = 0) {
    spec.validate();
    return render(resolve(spec), scene, pass, threads);
}

// Fronto-parallel view of a unit quad in the z = 0 plane; pixel (x, y)
// samples the quad at the centre of texel (x, y).
struct PlaneScene {
    double camera_distance = 1.0;
    LightConfig light = [] {
        LightConfig l;
        l.intensity = Rgb(0.8 * kPi);
        l.distance = 1.0;
        return l;
    }();
    int width = 256;
    int height = 256;

    void validate() const {
        if (width <= 0 || height <= 0) throw ConfigError("image size must be positive");
        if (!(camera_distance > 0)) throw ConfigError("camera distance must be positive");
        light.validate();
    }
};

inline Vec3 plane_point(int x, int y, int width, int height) {
    return {-0.5 + (x + 0.5) / width, 0.5 - (y + 0.5) / height, 0.0};
}

inline CameraFrame plane_camera(const PlaneScene& scene) {
    return camera_frame({0, 0, scene.camera_distance}, {0, 0, 0});
}

inline RenderedImage render_plane(const BrdfSpec& spec, const PlaneScene& scene, RenderPass pass = RenderPass::Full,
                                  unsigned threads = 0) {
    spec.validate();
    scene.validate();
    const ShadingParams params = resolve(spec);
    const CameraFrame cam = plane_camera(scene);
    const Vec3 light_pos = light_position(scene.light, cam, {0, 0, 0});
    auto img = RenderedImage::zeros(scene.width, scene.height, pass);
    parallel_for(static_cast<std::size_t>(scene.height), threads, [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < scene.width; ++x)
            img.set(x, y, shade_point(params, plane_point(x, y, scene.width, scene.height), {0, 0, 1}, cam.origin,
                                      light_pos, scene.light.intensity, pass));
    });
    return img;
}

// Least-squares scalar s minimising |src - s * dst|^2 over diffuse-only
// renders; applied to the target renderer's light intensity.
inline double irradiance_match(const RenderedImage& src_diffuse, const RenderedImage& dst_diffuse) {
    if (!src_diffuse.same_shape(dst_diffuse)) throw DimensionError("irradiance_match: image sizes differ");
    if (src_diffuse.pass != RenderPass::DiffuseOnly || dst_diffuse.pass != RenderPass::DiffuseOnly)
        throw ConfigError("irradiance_match expects diffuse-only renders");
    double num = 0, den = 0;
    for (std::size_t i = 0; i < src_diffuse.pixels.size(); ++i) {
        num += src_diffuse.pixels[i] * dst_diffuse.pixels[i];
        den += dst_diffuse.pixels[i] * dst_diffuse.pixels[i];
    }
    if (den == 0.0) throw NumericError("irradiance_match: target diffuse render has no energy");
    return num / den;
}

}  // namespace brdfremap
