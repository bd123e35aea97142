#pragma once

#include "rct.hpp"

namespace prim3d
{

/// Three-valued regularized boolean tables. For Difference, `a` is the
/// minuend and `b` the subtrahend.
constexpr Membership combine(BoolOp op, Membership a, Membership b)
{
    using M = Membership;
    switch (op)
    {
        case BoolOp::Union:
            if (a == M::In || b == M::In)
                return M::In;
            if (a == M::Out && b == M::Out)
                return M::Out;
            return M::On;
        case BoolOp::Intersection:
            if (a == M::In && b == M::In)
                return M::In;
            if (a == M::Out || b == M::Out)
                return M::Out;
            return M::On;
        case BoolOp::Difference:
            if (a == M::In && b == M::Out)
                return M::In;
            if (a == M::Out || b == M::In)
                return M::Out;
            return M::On;
    }
    return M::Out;
}

inline constexpr int kNoForcedLeaf = -1;

/// Membership of `p` in the solid rooted at `node`. When `forced_leaf` names
/// a leaf, that leaf's own test is replaced by On.
Membership classify_subtree(RctSample const& sample, int node, Vec3 const& p, double tol,
                            int forced_leaf = kNoForcedLeaf);

inline Membership classify_membership(RctSample const& sample, Vec3 const& p, double tol)
{
    return classify_subtree(sample, sample.shape.root(), p, tol);
}

}  // namespace prim3d
