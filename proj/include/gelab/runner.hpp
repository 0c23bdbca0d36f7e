#pragma once

#include "gelab/config.hpp"
#include "gelab/verify.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gelab {

struct JobRecord {
    std::string name;
    std::uint64_t seed = 0;
    double seconds = 0.0;
    bool ok = true;        // finished without throwing
    bool passed = true;    // every assertion held (suites only)
    std::string error;
};

struct RunManifest {
    std::string config_hash;
    std::string version;
    std::uint64_t master_seed = 0;
    std::vector<JobRecord> jobs;

    /// Hash over everything except timings, so reruns share it.
    std::string hash() const;
    /// 0 when every job finished and every suite passed, 1 otherwise.
    int exit_code() const;
};

/// Writes `path` through a temporary file and a rename.
void write_atomic(const std::string& path, const std::string& content);

/// Expands the config into jobs (one per suite, or per suite and grid point
/// for estimators), runs them in order and writes one CSV per job, one
/// summary per verification suite and manifest.txt into config.output_dir.
/// Job seeds are derive_seed(config.seed, job index).
RunManifest run(const ExperimentConfig& config);

}  // namespace gelab
