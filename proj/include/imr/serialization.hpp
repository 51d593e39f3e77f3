#pragma once

#include "imr/canonical_tensor.hpp"
#include "imr/lowrank_operator.hpp"
#include "imr/problem.hpp"
#include "imr/rank_one_metric.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace imr {

enum class TensorEncoding { json, binary };

/// Tensor stream: one JSON header line (format, version, order, dims, rank,
/// encoding, layout), then either the factors as embedded JSON arrays or the
/// raw little-endian float64 payload, factor by factor, each row-major.
void write_tensor(std::ostream& os, const CanonicalTensor& t, TensorEncoding enc = TensorEncoding::binary);
CanonicalTensor read_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const CanonicalTensor& t,
                 TensorEncoding enc = TensorEncoding::binary);
CanonicalTensor load_tensor(const std::filesystem::path& path);

nlohmann::json tensor_to_json(const CanonicalTensor& t);
CanonicalTensor tensor_from_json(const nlohmann::json& j);

/// Dense factors as row-major arrays, sparse ones as (row, col, value) triplets.
nlohmann::json factor_to_json(const FactorMatrix& f);
FactorMatrix factor_from_json(const nlohmann::json& j);

nlohmann::json operator_to_json(const LowRankOperator& a);
LowRankOperator operator_from_json(const nlohmann::json& j);

nlohmann::json metric_to_json(const RankOneMetric& m);
RankOneMetric metric_from_json(const nlohmann::json& j);

/// Everything a solve needs, including the QoI descriptor and node coordinates.
nlohmann::json problem_to_json(const Problem& p);
Problem problem_from_json(const nlohmann::json& j);

/// Writes through a temporary sibling and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

}  // namespace imr
