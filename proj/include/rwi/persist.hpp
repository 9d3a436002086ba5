#pragma once

// Append-only line-delimited result records, one file per experiment
// directory. A record carries enough provenance (config hash, unit key, seed
// lineage inside the payload, artifact version) to regenerate it exactly.

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rwi/version.hpp"

namespace rwi {

struct ResultRecord {
    std::string config_hash;
    std::string timestamp;  // ISO-8601 UTC; excluded from determinism guarantees
    std::string unit;
    std::string kind;
    std::string version = kVersion;
    nlohmann::json payload;

    nlohmann::json to_json() const {
        return {{"config_hash", config_hash}, {"timestamp", timestamp}, {"unit", unit},
                {"kind", kind},               {"version", version},     {"payload", payload}};
    }

    static ResultRecord from_json(const nlohmann::json& j) {
        ResultRecord r;
        r.config_hash = j.at("config_hash").get<std::string>();
        r.timestamp = j.value("timestamp", "");
        r.unit = j.at("unit").get<std::string>();
        r.kind = j.at("kind").get<std::string>();
        r.version = j.value("version", "");
        r.payload = j.at("payload");
        return r;
    }
};

inline std::string iso8601_utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class RecordStore {
public:
    explicit RecordStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path records_path() const { return dir_ / "records.jsonl"; }

    void append(const ResultRecord& record) {
        std::ofstream out(records_path(), std::ios::app);
        if (!out) throw std::runtime_error("RecordStore: cannot open " + records_path().string());
        out << record.to_json().dump() << '\n';
    }

    std::vector<ResultRecord> load_all() const {
        std::vector<ResultRecord> records;
        std::ifstream in(records_path());
        if (!in) return records;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            records.push_back(ResultRecord::from_json(nlohmann::json::parse(line)));
        }
        return records;
    }

    // (config hash, unit key) pairs already persisted; drives idempotent re-runs.
    std::set<std::pair<std::string, std::string>> completed_units() const {
        std::set<std::pair<std::string, std::string>> done;
        for (const ResultRecord& r : load_all()) done.emplace(r.config_hash, r.unit);
        return done;
    }

private:
    std::filesystem::path dir_;
};

}  // namespace rwi
