#pragma once

#include <json.hpp>

#include "distill.hpp"
#include "features.hpp"
#include "rct.hpp"
#include "sampler.hpp"

namespace prim3d
{

using Json = nlohmann::ordered_json;

inline constexpr char const* kToolVersion = "prim3d 0.1.0";

Json to_json(RctSpec const& spec);
RctSpec rct_spec_from_json(Json const& j);

Json to_json(SamplerConfig const& cfg);
SamplerConfig sampler_config_from_json(Json const& j);

Json to_json(DescriptorConfig const& cfg);
DescriptorConfig descriptor_config_from_json(Json const& j);

/*!
 * RctSample record:
 *
 *   {"provenance": {"master_seed", "object_index"},
 *    "tree": {"left": [...], "right": [...]},            // pre-order, -1 = leaf
 *    "leaves": [{"kind", "params", "rotation" (row-major 3x3),
 *                "translation", "scale"}, ...],
 *    "internal": [{"node", "op", "anchor", "anchor_point"}, ...]}  // post-order
 */
Json to_json(RctSample const& sample);
RctSample rct_sample_from_json(Json const& j);

//! Deterministic part of a report; timings live under the separate "timing" key.
Json to_json(DistillReport const& report, bool include_timing = true);

}  // namespace prim3d
