#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "bectwist/core/errors.hpp"
#include "bectwist/orchestration/config.hpp"

#ifndef BECTWIST_VERSION
#define BECTWIST_VERSION "0.0.0"
#endif

namespace bectwist {

namespace fs = std::filesystem;

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("io.checksum", "SHA-256 failed");
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i)
        out += fmt::format("{:02x}", digest[i]);
    return out;
}

inline std::string read_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("io", "cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string sha256_file(const fs::path &path) { return sha256_hex(read_file(path)); }

/// Hash of the result-determining configuration.
inline std::string config_hash(const ExperimentConfig &c) {
    return sha256_hex(canonical_config(c));
}

struct FileEntry {
    std::string path; // relative to the run directory
    std::uintmax_t bytes = 0;
    std::string sha256;
    friend bool operator==(const FileEntry &, const FileEntry &) = default;
};

struct StageRecord {
    std::string name;
    double seconds = 0.0;
    std::string status = "ok"; // ok | failed
    std::string error_code;
    std::string message;
};

struct RunManifest {
    std::string config_hash;
    std::string code_version = BECTWIST_VERSION;
    std::string mode;
    std::string run_dir;
    bool ok = true;
    std::vector<StageRecord> stages;
    std::vector<FileEntry> files;

    [[nodiscard]] json to_json() const {
        json st = json::array(), fl = json::array();
        for (const auto &s : stages) {
            json e = {{"name", s.name}, {"seconds", s.seconds}, {"status", s.status}};
            if (s.status != "ok")
                e["error"] = {{"code", s.error_code}, {"message", s.message}};
            st.push_back(e);
        }
        for (const auto &f : files)
            fl.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
        return {{"config_hash", config_hash}, {"code_version", code_version},
                {"mode", mode},               {"run_dir", run_dir},
                {"ok", ok},                   {"stages", st},
                {"files", fl}};
    }
};

/// Numbers in output tables use the shortest round-trip representation.
inline std::string csv_number(double x) { return fmt::format("{}", x); }

class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(const std::vector<double> &values) {
        if (values.size() != header_.size())
            throw Error("io.csv", "row has " + std::to_string(values.size()) + " fields, header " +
                                      std::to_string(header_.size()));
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values)
            cells.push_back(csv_number(v));
        rows_.push_back(std::move(cells));
    }

    void row(std::vector<std::string> cells) {
        if (cells.size() != header_.size())
            throw Error("io.csv", "row width differs from header");
        rows_.push_back(std::move(cells));
    }

    [[nodiscard]] std::string str() const {
        std::string out = fmt::format("{}\n", fmt::join(header_, ","));
        for (const auto &r : rows_)
            out += fmt::format("{}\n", fmt::join(r, ","));
        return out;
    }

    [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/**
 * Output directory of one run. Every file goes through `write_*` or
 * `record` so the manifest inventory is complete; `sub` opens a nested
 * directory that shares the same manifest.
 */
class RunContext {
  public:
    RunContext(fs::path root, std::shared_ptr<RunManifest> manifest)
        : state_(std::make_shared<State>()) {
        state_->root = std::move(root);
        state_->manifest = std::move(manifest);
        fs::create_directories(state_->root);
    }

    [[nodiscard]] RunContext sub(const std::string &name) const {
        RunContext c = *this;
        c.prefix_ = prefix_.empty() ? name : prefix_ + "/" + name;
        fs::create_directories(c.path(""));
        return c;
    }

    [[nodiscard]] fs::path path(const std::string &rel) const {
        fs::path p = state_->root;
        if (!prefix_.empty())
            p /= prefix_;
        return rel.empty() ? p : p / rel;
    }

    [[nodiscard]] const fs::path &root() const noexcept { return state_->root; }
    [[nodiscard]] RunManifest &manifest() const noexcept { return *state_->manifest; }

    void write_text(const std::string &rel, const std::string &content) const {
        const auto p = path(rel);
        if (p.has_parent_path())
            fs::create_directories(p.parent_path());
        {
            std::ofstream out(p, std::ios::binary | std::ios::trunc);
            if (!out)
                throw Error("io", "cannot open " + p.string());
            out << content;
            if (!out)
                throw Error("io", "write failed: " + p.string());
        }
        record_path(p, content);
    }

    void write_json(const std::string &rel, const json &j) const { write_text(rel, j.dump(2) + "\n"); }
    void write_csv(const std::string &rel, const CsvTable &t) const { write_text(rel, t.str()); }

    /// Adds a file written elsewhere (field snapshots) to the inventory.
    void record(const fs::path &p) const { record_path(p, read_file(p)); }

    /// Runs `f` as a named stage: wall time is logged, failures are logged
    /// and rethrown.
    template <class F> auto stage(const std::string &name, F &&f) const {
        const auto start = std::chrono::steady_clock::now();
        auto finish = [&](std::string status, std::string code, std::string msg) {
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
            std::lock_guard lock(state_->mutex);
            state_->manifest->stages.push_back(
                {prefix_.empty() ? name : prefix_ + "/" + name, dt.count(), std::move(status),
                 std::move(code), std::move(msg)});
        };
        try {
            if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
                f();
                finish("ok", "", "");
            } else {
                auto r = f();
                finish("ok", "", "");
                return r;
            }
        } catch (const Error &e) {
            finish("failed", e.code(), e.what());
            throw;
        } catch (const std::exception &e) {
            finish("failed", "internal", e.what());
            throw;
        }
    }

  private:
    struct State {
        fs::path root;
        std::shared_ptr<RunManifest> manifest;
        std::mutex mutex;
    };

    void record_path(const fs::path &p, const std::string &content) const {
        FileEntry e{fs::relative(p, state_->root).generic_string(), content.size(),
                    sha256_hex(content)};
        std::lock_guard lock(state_->mutex);
        auto &files = state_->manifest->files;
        for (auto &f : files)
            if (f.path == e.path) {
                f = e;
                return;
            }
        files.push_back(std::move(e));
    }

    std::shared_ptr<State> state_;
    std::string prefix_;
};

/// `<out_dir>/<mode>-<hash prefix>`; an occupied directory is never reused,
/// later runs get `-r2`, `-r3`, ...
inline fs::path allocate_run_dir(const fs::path &out_dir, const ExperimentConfig &c,
                                 const std::string &hash) {
    const std::string base = fmt::format("{}-{}", to_string(c.mode), hash.substr(0, 12));
    fs::path p = out_dir / base;
    for (int k = 2; fs::exists(p); ++k)
        p = out_dir / fmt::format("{}-r{}", base, k);
    return p;
}

} // namespace bectwist
