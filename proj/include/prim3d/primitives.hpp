#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "common.hpp"
#include "rng.hpp"

namespace prim3d
{

enum class PrimitiveKind : std::uint8_t
{
    Sphere = 0,
    Box = 1,
    Cylinder = 2,
    Cone = 3,
    Torus = 4,
};

inline constexpr std::size_t kNumKinds = 5;
inline constexpr std::array<PrimitiveKind, kNumKinds> kAllKinds = {
    PrimitiveKind::Sphere, PrimitiveKind::Box, PrimitiveKind::Cylinder,
    PrimitiveKind::Cone, PrimitiveKind::Torus};

std::string_view to_string(PrimitiveKind kind);
std::optional<PrimitiveKind> parse_kind(std::string_view name);

struct SphereParams
{
    double radius;
};

struct BoxParams
{
    Vec3 half_extents;
};

struct CylinderParams
{
    double radius;
    double half_height;
};

//! Apex at +half_height on the z axis, base disk at -half_height.
struct ConeParams
{
    double radius;
    double half_height;
};

struct TorusParams
{
    double major_radius;
    double minor_radius;
};

//! Canonical shape parameters; the alternative index is the PrimitiveKind.
using ShapeParams
    = std::variant<SphereParams, BoxParams, CylinderParams, ConeParams, TorusParams>;

inline PrimitiveKind kind_of(ShapeParams const& params)
{
    return static_cast<PrimitiveKind>(params.index());
}

/// Throws InvalidParams unless the parameters are positive and the canonical
/// solid fits in the closed unit ball (and a torus is a ring torus).
void validate(ShapeParams const& params);

/// Flat parameter list, in declaration order of the kind's struct.
std::vector<double> flatten(ShapeParams const& params);
ShapeParams unflatten(PrimitiveKind kind, std::span<double const> values);

//---------------------------------------------------------------------------//
// POSE
//---------------------------------------------------------------------------//
/*!
 * Similarity transform x -> scale * (rotation * x) + translation.
 */
struct Pose
{
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    double scale = 1.0;
};

void validate(Pose const& pose);

/// Rotate, then scale, then translate.
inline Vec3 apply_pose(Pose const& pose, Vec3 const& p)
{
    return pose.scale * (pose.rotation * p) + pose.translation;
}

inline Vec3 apply_inverse_pose(Pose const& pose, Vec3 const& p)
{
    return pose.rotation.transpose() * (p - pose.translation) / pose.scale;
}

//---------------------------------------------------------------------------//
// INSTANCES
//---------------------------------------------------------------------------//
struct PrimitiveInstance
{
    ShapeParams params;
    Pose pose;

    PrimitiveKind kind() const { return kind_of(params); }
};

enum class Membership : std::uint8_t
{
    In,
    On,
    Out,
};

std::string_view to_string(Membership m);

struct SurfaceSample
{
    Vec3 point;
    Vec3 normal;
    int patch = 0;
};

//! Closed-form area of the whole canonical boundary.
double surface_area(ShapeParams const& params);

//! Area of each boundary patch, indexed by patch id.
std::vector<double> patch_areas(ShapeParams const& params);

/// Area-uniform sample on the canonical boundary with outward unit normal.
SurfaceSample sample_canonical_surface(ShapeParams const& params, Rng& rng);

/// Signed inside/outside surrogate in the canonical frame: negative inside,
/// zero on the boundary. Exact distance for sphere and torus; max of exact
/// half-space/side distances for box, cylinder and cone.
double canonical_signed_value(ShapeParams const& params, Vec3 const& q);

Membership classify_canonical(ShapeParams const& params, Vec3 const& q, double tol);

/// World-space classification; `tol` is in world units.
Membership classify_point(PrimitiveInstance const& instance, Vec3 const& p, double tol);

struct BoundingSphere
{
    Vec3 center;
    double radius;
};

inline BoundingSphere bounding_sphere(PrimitiveInstance const& instance)
{
    return {instance.pose.translation, instance.pose.scale};
}

inline double world_surface_area(PrimitiveInstance const& instance)
{
    return surface_area(instance.params) * instance.pose.scale * instance.pose.scale;
}

//---------------------------------------------------------------------------//
// PARAMETER DOMAINS
//---------------------------------------------------------------------------//
/// Uniform draw from the default parameter domain of `kind`.
ShapeParams sample_params(PrimitiveKind kind, Rng& rng);

/// True if the parameters lie in the default sampling domain of their kind.
bool in_default_domain(ShapeParams const& params);

inline constexpr double kDefaultOnTolerance = 1e-7;

}  // namespace prim3d
