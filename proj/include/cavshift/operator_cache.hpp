#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>

#include "cavshift/cavity_spectrum.hpp"

namespace cavshift {

// On-disk operator store. One binary file per key, checksummed with CRC-32; files that fail
// the checksum or the header checks are treated as misses and rewritten.
class FileOperatorCache : public OperatorCache {
public:
    explicit FileOperatorCache(std::filesystem::path dir);

    bool load(const std::string& key, DiscreteOperator& op) override;
    void store(const std::string& key, const DiscreteOperator& op) override;

    struct Stats {
        int hits = 0;
        int misses = 0;
        int corrupt = 0;
        int writes = 0;
        double assembly_seconds = 0.0;  // time between a miss and the matching store
        double load_seconds = 0.0;
    };
    Stats stats() const;
    const std::filesystem::path& directory() const { return dir_; }
    std::filesystem::path file_for(const std::string& key) const;

private:
    using clock = std::chrono::steady_clock;
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    Stats stats_;
    std::map<std::string, clock::time_point> pending_;
};

// --cache flag first, then CAVSHIFT_CACHE_DIR; empty when neither is set.
std::string resolve_cache_dir(const std::string& flag);

}  // namespace cavshift
