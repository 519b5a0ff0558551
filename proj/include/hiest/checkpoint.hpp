#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hiest/model.hpp"

namespace hiest {

/// On-disk container: a JSON header carrying the model configuration plus
/// named scalars (epoch, step, best validation MAE, ...), followed by named
/// float64 payloads written as raw little-endian bytes, so round-trips are
/// bit-exact. Format tag "HIESTCK1".
struct Checkpoint {
    HiestConfig config;
    std::map<std::string, double> scalars;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Rebuild a parameter set from a checkpoint's tensors (names per
/// HiestParams::named). Throws DataError on missing names or shape drift.
HiestParams params_from_checkpoint(const Checkpoint& ckpt, std::size_t n_regions);

/// Collect a parameter set into checkpoint tensor entries.
std::vector<std::pair<std::string, Tensor>> checkpoint_tensors(const HiestParams& params);

}  // namespace hiest
