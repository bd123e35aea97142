#include "prim3d/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/LU>

namespace prim3d
{
namespace
{
constexpr double pi = std::numbers::pi;
constexpr double kUnitBallSlack = 1e-12;
constexpr int kMaxRejections = 10000;

template<class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};

[[noreturn]] void bad_params(std::string const& msg)
{
    fail(ErrorCode::InvalidParams, msg);
}

// Choose a patch index with probability proportional to its area.
int pick_patch(std::vector<double> const& areas, Rng& rng)
{
    double total = 0;
    for (double a : areas)
        total += a;
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i + 1 < areas.size(); ++i)
    {
        if (u < areas[i])
            return static_cast<int>(i);
        u -= areas[i];
    }
    return static_cast<int>(areas.size() - 1);
}

// Uniform point in a disk of radius r.
std::pair<double, double> sample_disk(double r, Rng& rng)
{
    double rho = r * std::sqrt(rng.uniform());
    double phi = 2 * pi * rng.uniform();
    return {rho * std::cos(phi), rho * std::sin(phi)};
}

bool within(double v, double lo, double hi)
{
    constexpr double slack = 1e-12;
    return v >= lo - slack && v <= hi + slack;
}
}  // namespace

std::string_view to_string(ErrorCode code)
{
    switch (code)
    {
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::InternalSamplingFailure: return "InternalSamplingFailure";
        case ErrorCode::Overflow: return "Overflow";
        case ErrorCode::EmptySolid: return "EmptySolid";
        case ErrorCode::DegenerateObject: return "DegenerateObject";
        case ErrorCode::SamplingExhausted: return "SamplingExhausted";
        case ErrorCode::DegenerateCloud: return "DegenerateCloud";
        case ErrorCode::EmptySet: return "EmptySet";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::UnnormalizedInput: return "UnnormalizedInput";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::HeterogeneousRecords: return "HeterogeneousRecords";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
    }
    return "Unknown";
}

std::string_view to_string(PrimitiveKind kind)
{
    switch (kind)
    {
        case PrimitiveKind::Sphere: return "sphere";
        case PrimitiveKind::Box: return "box";
        case PrimitiveKind::Cylinder: return "cylinder";
        case PrimitiveKind::Cone: return "cone";
        case PrimitiveKind::Torus: return "torus";
    }
    return "unknown";
}

std::optional<PrimitiveKind> parse_kind(std::string_view name)
{
    for (auto k : kAllKinds)
    {
        if (to_string(k) == name)
            return k;
    }
    return std::nullopt;
}

std::string_view to_string(Membership m)
{
    switch (m)
    {
        case Membership::In: return "in";
        case Membership::On: return "on";
        case Membership::Out: return "out";
    }
    return "unknown";
}

//---------------------------------------------------------------------------//
// PARAMETER VALIDATION
//---------------------------------------------------------------------------//
void validate(ShapeParams const& params)
{
    auto require_positive = [](double v, char const* what) {
        if (!(v > 0) || !std::isfinite(v))
        {
            std::ostringstream os;
            os << what << " must be positive and finite, got " << v;
            bad_params(os.str());
        }
    };
    auto require_in_ball = [](double extent, char const* what) {
        if (extent > 1 + kUnitBallSlack)
        {
            std::ostringstream os;
            os << what << " extent " << extent << " exceeds the unit ball";
            bad_params(os.str());
        }
    };

    std::visit(overloaded{
                   [&](SphereParams const& s) {
                       require_positive(s.radius, "sphere radius");
                       require_in_ball(s.radius, "sphere");
                   },
                   [&](BoxParams const& b) {
                       for (int i = 0; i < 3; ++i)
                           require_positive(b.half_extents[i], "box half-extent");
                       require_in_ball(b.half_extents.norm(), "box");
                   },
                   [&](CylinderParams const& c) {
                       require_positive(c.radius, "cylinder radius");
                       require_positive(c.half_height, "cylinder half-height");
                       require_in_ball(std::hypot(c.radius, c.half_height), "cylinder");
                   },
                   [&](ConeParams const& c) {
                       require_positive(c.radius, "cone radius");
                       require_positive(c.half_height, "cone half-height");
                       require_in_ball(std::hypot(c.radius, c.half_height), "cone");
                   },
                   [&](TorusParams const& t) {
                       require_positive(t.major_radius, "torus major radius");
                       require_positive(t.minor_radius, "torus minor radius");
                       if (!(t.minor_radius < t.major_radius))
                           bad_params("torus minor radius must be below the major radius");
                       require_in_ball(t.major_radius + t.minor_radius, "torus");
                   },
               },
               params);
}

void validate(Pose const& pose)
{
    if (!(pose.scale > 0) || !std::isfinite(pose.scale))
        bad_params("pose scale must be positive");
    if (!pose.translation.allFinite())
        bad_params("pose translation must be finite");
    Mat3 const& r = pose.rotation;
    if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9
        || std::abs(r.determinant() - 1) > 1e-9)
    {
        bad_params("pose rotation is not a proper rotation");
    }
}

std::vector<double> flatten(ShapeParams const& params)
{
    return std::visit(overloaded{
                          [](SphereParams const& s) { return std::vector<double>{s.radius}; },
                          [](BoxParams const& b) {
                              return std::vector<double>{
                                  b.half_extents[0], b.half_extents[1], b.half_extents[2]};
                          },
                          [](CylinderParams const& c) {
                              return std::vector<double>{c.radius, c.half_height};
                          },
                          [](ConeParams const& c) {
                              return std::vector<double>{c.radius, c.half_height};
                          },
                          [](TorusParams const& t) {
                              return std::vector<double>{t.major_radius, t.minor_radius};
                          },
                      },
                      params);
}

ShapeParams unflatten(PrimitiveKind kind, std::span<double const> v)
{
    auto expect = [&](std::size_t n) {
        if (v.size() != n)
        {
            std::ostringstream os;
            os << to_string(kind) << " expects " << n << " parameters, got " << v.size();
            bad_params(os.str());
        }
    };
    switch (kind)
    {
        case PrimitiveKind::Sphere: expect(1); return SphereParams{v[0]};
        case PrimitiveKind::Box: expect(3); return BoxParams{Vec3(v[0], v[1], v[2])};
        case PrimitiveKind::Cylinder: expect(2); return CylinderParams{v[0], v[1]};
        case PrimitiveKind::Cone: expect(2); return ConeParams{v[0], v[1]};
        case PrimitiveKind::Torus: expect(2); return TorusParams{v[0], v[1]};
    }
    bad_params("unknown primitive kind");
}

//---------------------------------------------------------------------------//
// AREA AND SURFACE SAMPLING
//---------------------------------------------------------------------------//
std::vector<double> patch_areas(ShapeParams const& params)
{
    return std::visit(
        overloaded{
            [](SphereParams const& s) {
                return std::vector<double>{4 * pi * s.radius * s.radius};
            },
            [](BoxParams const& b) {
                double const x = b.half_extents[0], y = b.half_extents[1],
                             z = b.half_extents[2];
                // +x, -x, +y, -y, +z, -z
                return std::vector<double>{
                    4 * y * z, 4 * y * z, 4 * x * z, 4 * x * z, 4 * x * y, 4 * x * y};
            },
            [](CylinderParams const& c) {
                double cap = pi * c.radius * c.radius;
                // lateral, top cap, bottom cap
                return std::vector<double>{4 * pi * c.radius * c.half_height, cap, cap};
            },
            [](ConeParams const& c) {
                double slant = std::hypot(c.radius, 2 * c.half_height);
                // lateral, base
                return std::vector<double>{pi * c.radius * slant, pi * c.radius * c.radius};
            },
            [](TorusParams const& t) {
                return std::vector<double>{4 * pi * pi * t.major_radius * t.minor_radius};
            },
        },
        params);
}

double surface_area(ShapeParams const& params)
{
    validate(params);
    double total = 0;
    for (double a : patch_areas(params))
        total += a;
    return total;
}

SurfaceSample sample_canonical_surface(ShapeParams const& params, Rng& rng)
{
    return std::visit(
        overloaded{
            [&](SphereParams const& s) {
                Vec3 n;
                double len = 0;
                do
                {
                    n = Vec3(rng.normal(), rng.normal(), rng.normal());
                    len = n.norm();
                } while (len < 1e-12);
                n /= len;
                return SurfaceSample{s.radius * n, n, 0};
            },
            [&](BoxParams const& b) {
                int face = pick_patch(patch_areas(params), rng);
                int axis = face / 2;
                double sign = (face % 2 == 0) ? 1.0 : -1.0;
                Vec3 p;
                for (int i = 0; i < 3; ++i)
                    p[i] = rng.uniform(-b.half_extents[i], b.half_extents[i]);
                p[axis] = sign * b.half_extents[axis];
                Vec3 n = Vec3::Zero();
                n[axis] = sign;
                return SurfaceSample{p, n, face};
            },
            [&](CylinderParams const& c) {
                int patch = pick_patch(patch_areas(params), rng);
                if (patch == 0)
                {
                    double phi = 2 * pi * rng.uniform();
                    double z = rng.uniform(-c.half_height, c.half_height);
                    Vec3 n(std::cos(phi), std::sin(phi), 0);
                    return SurfaceSample{Vec3(c.radius * n[0], c.radius * n[1], z), n, 0};
                }
                auto [x, y] = sample_disk(c.radius, rng);
                double sign = (patch == 1) ? 1.0 : -1.0;
                return SurfaceSample{
                    Vec3(x, y, sign * c.half_height), Vec3(0, 0, sign), patch};
            },
            [&](ConeParams const& c) {
                int patch = pick_patch(patch_areas(params), rng);
                if (patch == 0)
                {
                    // Slant distance from the apex has density proportional to itself.
                    double t = std::sqrt(rng.uniform());
                    double phi = 2 * pi * rng.uniform();
                    double rho = c.radius * t;
                    double z = c.half_height - 2 * c.half_height * t;
                    Vec3 n(2 * c.half_height * std::cos(phi),
                           2 * c.half_height * std::sin(phi),
                           c.radius);
                    n.normalize();
                    return SurfaceSample{
                        Vec3(rho * std::cos(phi), rho * std::sin(phi), z), n, 0};
                }
                auto [x, y] = sample_disk(c.radius, rng);
                return SurfaceSample{Vec3(x, y, -c.half_height), Vec3(0, 0, -1), 1};
            },
            [&](TorusParams const& t) {
                double const big = t.major_radius, small = t.minor_radius;
                double u = 2 * pi * rng.uniform();
                for (int iter = 0; iter < kMaxRejections; ++iter)
                {
                    double v = 2 * pi * rng.uniform();
                    double accept = (big + small * std::cos(v)) / (big + small);
                    if (rng.uniform() < accept)
                    {
                        Vec3 n(std::cos(v) * std::cos(u), std::cos(v) * std::sin(u), std::sin(v));
                        double ring = big + small * std::cos(v);
                        Vec3 p(ring * std::cos(u), ring * std::sin(u), small * std::sin(v));
                        return SurfaceSample{p, n, 0};
                    }
                }
                fail(ErrorCode::InternalSamplingFailure, "torus minor-angle rejection");
            },
        },
        params);
}

//---------------------------------------------------------------------------//
// CLASSIFICATION
//---------------------------------------------------------------------------//
double canonical_signed_value(ShapeParams const& params, Vec3 const& q)
{
    return std::visit(
        overloaded{
            [&](SphereParams const& s) { return q.norm() - s.radius; },
            [&](BoxParams const& b) {
                return (q.cwiseAbs() - b.half_extents).maxCoeff();
            },
            [&](CylinderParams const& c) {
                double rho = std::hypot(q[0], q[1]);
                return std::max(rho - c.radius, std::abs(q[2]) - c.half_height);
            },
            [&](ConeParams const& c) {
                double const h2 = 2 * c.half_height;
                double rho = std::hypot(q[0], q[1]);
                // Distance to the infinite lateral cone along its normal.
                double lateral = (rho - c.radius * (c.half_height - q[2]) / h2) * h2
                                 / std::hypot(h2, c.radius);
                return std::max(lateral, -c.half_height - q[2]);
            },
            [&](TorusParams const& t) {
                double rho = std::hypot(q[0], q[1]);
                return std::hypot(rho - t.major_radius, q[2]) - t.minor_radius;
            },
        },
        params);
}

Membership classify_canonical(ShapeParams const& params, Vec3 const& q, double tol)
{
    double v = canonical_signed_value(params, q);
    if (std::abs(v) <= tol)
        return Membership::On;
    return v < 0 ? Membership::In : Membership::Out;
}

Membership classify_point(PrimitiveInstance const& instance, Vec3 const& p, double tol)
{
    if (!(tol >= 0))
        bad_params("classification tolerance must be nonnegative");
    if (!(instance.pose.scale > 0))
        bad_params("pose scale must be positive");
    Vec3 q = apply_inverse_pose(instance.pose, p);
    return classify_canonical(instance.params, q, tol / instance.pose.scale);
}

//---------------------------------------------------------------------------//
// DEFAULT DOMAINS
//---------------------------------------------------------------------------//
ShapeParams sample_params(PrimitiveKind kind, Rng& rng)
{
    switch (kind)
    {
        case PrimitiveKind::Sphere: return SphereParams{rng.uniform(0.5, 1.0)};
        case PrimitiveKind::Box: {
            double x = rng.uniform(0.2, 0.577);
            double y = rng.uniform(0.2, 0.577);
            double z = rng.uniform(0.2, 0.577);
            return BoxParams{Vec3(x, y, z)};
        }
        case PrimitiveKind::Cylinder:
        case PrimitiveKind::Cone: {
            for (int iter = 0; iter < kMaxRejections; ++iter)
            {
                double r = rng.uniform(0.2, 0.7);
                double h = rng.uniform(0.2, 0.7);
                if (r * r + h * h <= 1.0)
                {
                    if (kind == PrimitiveKind::Cylinder)
                        return CylinderParams{r, h};
                    return ConeParams{r, h};
                }
            }
            fail(ErrorCode::InternalSamplingFailure, "parameter rejection");
        }
        case PrimitiveKind::Torus: {
            double big = rng.uniform(0.4, 0.8);
            double hi = std::min({0.3, big - 0.05, 1.0 - big});
            return TorusParams{big, rng.uniform(0.1, hi)};
        }
    }
    bad_params("unknown primitive kind");
}

bool in_default_domain(ShapeParams const& params)
{
    return std::visit(
        overloaded{
            [](SphereParams const& s) { return within(s.radius, 0.5, 1.0); },
            [](BoxParams const& b) {
                return within(b.half_extents[0], 0.2, 0.577)
                       && within(b.half_extents[1], 0.2, 0.577)
                       && within(b.half_extents[2], 0.2, 0.577);
            },
            [](CylinderParams const& c) {
                return within(c.radius, 0.2, 0.7) && within(c.half_height, 0.2, 0.7)
                       && c.radius * c.radius + c.half_height * c.half_height <= 1.0;
            },
            [](ConeParams const& c) {
                return within(c.radius, 0.2, 0.7) && within(c.half_height, 0.2, 0.7)
                       && c.radius * c.radius + c.half_height * c.half_height <= 1.0;
            },
            [](TorusParams const& t) {
                double hi = std::min({0.3, t.major_radius - 0.05, 1.0 - t.major_radius});
                return within(t.major_radius, 0.4, 0.8) && within(t.minor_radius, 0.1, hi);
            },
        },
        params);
}

}  // namespace prim3d
