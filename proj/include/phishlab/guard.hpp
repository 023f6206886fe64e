#pragma once

// Snapshot-sequence defense: wire messages, per-session logo identity
// tracking, the temporal logo diff and a thread-safe session table. The
// network front end lives in guard_server.hpp.

#include "phishlab/detector.hpp"
#include "phishlab/png_io.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace phishlab {

struct GuardConfig {
    std::string bind_host = "127.0.0.1";
    unsigned short bind_port = 8765;
    int num_screenshots = 5;
    int interval_ms = 1000;
    double tolerance = DetectorConfig{}.theta;
    DomainSet allowlist;
    int session_timeout_ms = 30000;
    std::string reference_corpus;  // corpus directory holding the reference list
};

/// Empty when valid, otherwise the first problem.
inline std::string check_guard_config(const GuardConfig& c) {
    if (c.num_screenshots < 2) return "num_screenshots must be >= 2";
    if (c.interval_ms <= 0) return "interval_ms must be positive";
    if (c.tolerance < 0.0 || c.tolerance > 1.0) return "tolerance must lie in [0,1]";
    if (c.session_timeout_ms <= 0) return "session_timeout_ms must be positive";
    if (c.bind_host.empty()) return "bind host is empty";
    return {};
}

class GuardConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// "host:port", port required.
inline std::pair<std::string, unsigned short> parse_bind(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size())
        throw GuardConfigError("bind address must be host:port, got '" + std::string(text) + "'");
    const std::string port_text(text.substr(colon + 1));
    std::size_t used = 0;
    int port = -1;
    try {
        port = std::stoi(port_text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != port_text.size() || port < 0 || port > 65535) throw GuardConfigError("bad port in bind address: " + port_text);
    return {std::string(text.substr(0, colon)), static_cast<unsigned short>(port)};
}

inline std::string ascii_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return s;
}

/// One domain per line; blank lines and '#' comments ignored.
inline DomainSet read_allowlist_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GuardConfigError("cannot read allowlist " + path.string());
    DomainSet out;
    std::string line;
    while (std::getline(in, line)) {
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        const auto end = line.find_last_not_of(" \t\r");
        out.insert(ascii_lower(line.substr(start, end - start + 1)));
    }
    return out;
}

/// Keys: bind, num_screenshots, interval_ms, tolerance, allowlist,
/// allowlist_path, session_timeout_ms, reference_corpus. Relative paths
/// resolve against `base_dir`.
inline GuardConfig guard_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    static const std::set<std::string> known{"bind", "num_screenshots", "interval_ms", "tolerance", "allowlist",
                                             "allowlist_path", "session_timeout_ms", "reference_corpus"};
    if (!j.is_object()) throw GuardConfigError("guard config must be an object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw GuardConfigError("unknown guard config key: " + k);
    GuardConfig c;
    try {
        if (j.contains("bind")) std::tie(c.bind_host, c.bind_port) = parse_bind(j.at("bind").get<std::string>());
        c.num_screenshots = j.value("num_screenshots", c.num_screenshots);
        c.interval_ms = j.value("interval_ms", c.interval_ms);
        c.tolerance = j.value("tolerance", c.tolerance);
        c.session_timeout_ms = j.value("session_timeout_ms", c.session_timeout_ms);
        if (j.contains("allowlist"))
            for (const auto& d : j.at("allowlist")) c.allowlist.insert(ascii_lower(d.get<std::string>()));
        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
        };
        if (j.contains("allowlist_path")) c.allowlist.merge(read_allowlist_file(resolve(j.at("allowlist_path").get<std::string>())));
        if (j.contains("reference_corpus")) c.reference_corpus = resolve(j.at("reference_corpus").get<std::string>()).string();
    } catch (const nlohmann::json::exception& e) {
        throw GuardConfigError(std::string("guard config: ") + e.what());
    }
    if (auto err = check_guard_config(c); !err.empty()) throw GuardConfigError(err);
    return c;
}

/// GUARD_BIND replaces the bind address; GUARD_ALLOWLIST names a file whose
/// domains replace the configured allowlist.
inline void apply_env_overrides(GuardConfig& c, const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
    if (const char* bind = getenv_fn("GUARD_BIND"); bind && *bind) std::tie(c.bind_host, c.bind_port) = parse_bind(bind);
    if (const char* path = getenv_fn("GUARD_ALLOWLIST"); path && *path) c.allowlist = read_allowlist_file(path);
}

inline GuardConfig load_guard_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GuardConfigError("cannot read guard config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw GuardConfigError(path.string() + ": " + e.what());
    }
    return guard_config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------- allowlist

class ProtocolError : public std::runtime_error {
public:
    ProtocolError(const std::string& msg, bool fatal) : std::runtime_error(msg), fatal_(fatal) {}
    /// Fatal errors terminate the session.
    bool fatal() const { return fatal_; }

private:
    bool fatal_;
};

/// Lower-cased host of an absolute URL.
inline std::string url_host(std::string_view url) {
    static const std::regex re(R"(^[A-Za-z][A-Za-z0-9+.\-]*://(?:[^@/?#]*@)?(\[[^\]]*\]|[^:/?#]+)(?::\d*)?(?:[/?#].*)?$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(url.begin(), url.end(), m, re)) throw std::invalid_argument("unparseable url: " + std::string(url));
    std::string host = ascii_lower(m[1].str());
    while (!host.empty() && host.back() == '.') host.pop_back();
    if (host.empty()) throw std::invalid_argument("url has no host: " + std::string(url));
    return host;
}

/// True when the host or any parent domain is allowlisted.
inline bool check_allowlist(std::string_view url, const GuardConfig& cfg) {
    std::string host = url_host(url);
    if (cfg.allowlist.empty()) return false;
    for (std::string_view h = host;;) {
        if (cfg.allowlist.count(h)) return true;
        const auto dot = h.find('.');
        if (dot == std::string_view::npos) return false;
        h.remove_prefix(dot + 1);
    }
}

// ---------------------------------------------------------------- messages

inline std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw std::invalid_argument("base64 length is not a multiple of 4");
    std::vector<std::uint8_t> out(text.size() / 4 * 3);
    if (text.empty()) return out;
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) throw std::invalid_argument("invalid base64 payload");
    std::size_t pad = 0;
    if (text.back() == '=') ++pad;
    if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

struct SnapshotMsg {
    std::string session;
    int seq = 0;
    std::string url;
    std::string png_base64;
};

enum class VerdictReason { none, delayed_logo, allowlisted };

inline std::string_view to_string(VerdictReason r) {
    switch (r) {
        case VerdictReason::none: return "none";
        case VerdictReason::delayed_logo: return "delayed_logo";
        case VerdictReason::allowlisted: return "allowlisted";
    }
    return "?";
}

struct VerdictMsg {
    std::string session;
    bool warn = false;
    VerdictReason reason = VerdictReason::none;
    std::optional<std::string> matched_brand;
    std::optional<int> triggering_seq;

    friend bool operator==(const VerdictMsg&, const VerdictMsg&) = default;
};

inline nlohmann::ordered_json to_json(const SnapshotMsg& m) {
    return {{"type", "screenshot"}, {"session", m.session}, {"seq", m.seq}, {"url", m.url}, {"png", m.png_base64}};
}

inline nlohmann::ordered_json to_json(const VerdictMsg& m) {
    nlohmann::ordered_json j{{"type", "verdict"}, {"session", m.session}, {"warn", m.warn},
                             {"reason", std::string(to_string(m.reason))}};
    j["matched_brand"] = m.matched_brand ? nlohmann::ordered_json(*m.matched_brand) : nlohmann::ordered_json(nullptr);
    j["triggering_seq"] = m.triggering_seq ? nlohmann::ordered_json(*m.triggering_seq) : nlohmann::ordered_json(nullptr);
    return j;
}

inline std::string error_message(const std::string& session, const std::string& message, bool fatal) {
    return nlohmann::ordered_json{{"type", "error"}, {"session", session}, {"message", message}, {"fatal", fatal}}.dump();
}

inline SnapshotMsg snapshot_from_json(const nlohmann::json& j) {
    try {
        if (j.at("type").get<std::string>() != "screenshot") throw ProtocolError("expected a screenshot message", false);
        SnapshotMsg m;
        m.session = j.at("session").get<std::string>();
        m.seq = j.at("seq").get<int>();
        m.url = j.at("url").get<std::string>();
        m.png_base64 = j.at("png").get<std::string>();
        if (m.session.empty()) throw ProtocolError("empty session token", false);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed screenshot message: ") + e.what(), false);
    }
}

inline VerdictMsg verdict_from_json(const nlohmann::json& j) {
    if (j.at("type").get<std::string>() != "verdict") throw std::invalid_argument("expected a verdict message");
    VerdictMsg m;
    m.session = j.at("session").get<std::string>();
    m.warn = j.at("warn").get<bool>();
    const auto reason = j.at("reason").get<std::string>();
    if (reason == "none") m.reason = VerdictReason::none;
    else if (reason == "delayed_logo") m.reason = VerdictReason::delayed_logo;
    else if (reason == "allowlisted") m.reason = VerdictReason::allowlisted;
    else throw std::invalid_argument("unknown verdict reason: " + reason);
    if (!j.at("matched_brand").is_null()) m.matched_brand = j.at("matched_brand").get<std::string>();
    if (!j.at("triggering_seq").is_null()) m.triggering_seq = j.at("triggering_seq").get<int>();
    if (m.warn && (m.reason != VerdictReason::delayed_logo || !m.triggering_seq))
        throw std::invalid_argument("warning verdict without delayed_logo reason and triggering_seq");
    return m;
}

// ---------------------------------------------------------------- sessions

/// A localized logo: its hash and, when it matches the reference list, the
/// brand.
struct LogoIdentity {
    LogoHash hash;
    std::optional<std::string> brand;
};

inline bool same_identity(const LogoIdentity& a, const LogoIdentity& b, double tolerance) {
    if (a.brand && b.brand && *a.brand == *b.brand) return true;
    return similarity(a.hash, b.hash) >= tolerance;
}

struct SessionState {
    using Clock = std::chrono::steady_clock;

    std::string token;
    std::string url;
    std::vector<std::vector<LogoIdentity>> snapshots;
    Clock::time_point created{};
    Clock::time_point last_activity{};
    bool allowlisted = false;
    bool closed = false;
};

/// Warns on the first snapshot k >= 1 holding an identity seen in no
/// earlier snapshot.
inline VerdictMsg temporal_logo_diff(const SessionState& s, const GuardConfig& cfg) {
    VerdictMsg v;
    v.session = s.token;
    if (s.allowlisted) {
        v.reason = VerdictReason::allowlisted;
        return v;
    }
    if (s.snapshots.size() < 2) return v;
    for (std::size_t k = 1; k < s.snapshots.size(); ++k) {
        for (const auto& id : s.snapshots[k]) {
            bool seen = false;
            for (std::size_t j = 0; j < k && !seen; ++j)
                for (const auto& prev : s.snapshots[j])
                    if (same_identity(id, prev, cfg.tolerance)) {
                        seen = true;
                        break;
                    }
            if (!seen) {
                v.warn = true;
                v.reason = VerdictReason::delayed_logo;
                v.triggering_seq = static_cast<int>(k);
                v.matched_brand = id.brand;
                return v;
            }
        }
    }
    return v;
}

/// Logo identities in a snapshot: naive localization, then brand matching.
inline std::vector<LogoIdentity> snapshot_identities(const Raster& raster, const ReferenceIndex& refs,
                                                     const DetectorConfig& dcfg) {
    std::vector<LogoIdentity> out;
    for (const auto& box : locate_logos_naive(raster, dcfg)) {
        const Raster crop = raster.crop(box);
        LogoIdentity id{embed(crop, dcfg), std::nullopt};
        if (auto m = match_brand(crop, refs, dcfg)) id.brand = m->brand;
        out.push_back(std::move(id));
    }
    return out;
}

inline DetectorConfig guard_detector_config(const GuardConfig&) {
    DetectorConfig d;
    d.localization = Localization::naive;
    return d;
}

/// Appends one snapshot. Returns the verdict once one is due: at the last
/// of K snapshots, on the first delayed logo, or immediately for an
/// allowlisted URL. Throws ProtocolError for bad input.
inline std::optional<VerdictMsg> ingest_snapshot(SessionState& s, const SnapshotMsg& msg, const ReferenceIndex& refs,
                                                 const GuardConfig& cfg,
                                                 SessionState::Clock::time_point now = SessionState::Clock::now()) {
    if (s.closed) throw ProtocolError("session already closed", true);
    const int expected = static_cast<int>(s.snapshots.size());
    if (msg.seq != expected) {
        s.closed = true;
        throw ProtocolError("out-of-order seq " + std::to_string(msg.seq) + ", expected " + std::to_string(expected), true);
    }
    if (msg.seq >= cfg.num_screenshots) {
        s.closed = true;
        throw ProtocolError("seq beyond num_screenshots", true);
    }
    if (expected == 0) {
        s.token = msg.session;
        s.url = msg.url;
        s.created = now;
        try {
            s.allowlisted = check_allowlist(msg.url, cfg);
        } catch (const std::invalid_argument& e) {
            s.closed = true;
            throw ProtocolError(e.what(), true);
        }
    } else if (msg.url != s.url) {
        s.closed = true;
        throw ProtocolError("url changed within a session", true);
    }
    s.last_activity = now;
    if (s.allowlisted) {
        s.closed = true;
        return temporal_logo_diff(s, cfg);
    }
    Raster raster;
    try {
        raster = decode_png(base64_decode(msg.png_base64));
    } catch (const std::exception& e) {
        throw ProtocolError(std::string("bad screenshot payload: ") + e.what(), false);
    }
    s.snapshots.push_back(snapshot_identities(raster, refs, guard_detector_config(cfg)));
    VerdictMsg v = temporal_logo_diff(s, cfg);
    if (v.warn || static_cast<int>(s.snapshots.size()) == cfg.num_screenshots) {
        s.closed = true;
        return v;
    }
    return std::nullopt;
}

/// Session table shared by all connections. Each session is processed
/// under its own lock so slow detection never blocks other sessions.
class SessionManager {
public:
    using Clock = SessionState::Clock;

    SessionManager(ReferenceList refs, GuardConfig cfg)
        : refs_(std::move(refs)), cfg_(std::move(cfg)), index_(refs_, guard_detector_config(cfg_)) {
        if (auto err = check_guard_config(cfg_); !err.empty()) throw GuardConfigError(err);
    }

    const GuardConfig& config() const { return cfg_; }

    /// Handles one wire message; returns the replies to send (zero or one).
    std::vector<std::string> handle(std::string_view text, Clock::time_point now = Clock::now()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            return {error_message("", std::string("unparseable message: ") + e.what(), false)};
        }
        SnapshotMsg msg;
        try {
            msg = snapshot_from_json(j);
        } catch (const ProtocolError& e) {
            return {error_message(j.is_object() ? j.value("session", "") : "", e.what(), e.fatal())};
        }
        auto entry = acquire(msg, now);
        if (!entry) return {error_message(msg.session, "unknown or closed session", true)};
        std::lock_guard lock(entry->mu);
        try {
            auto verdict = ingest_snapshot(entry->state, msg, index_, cfg_, now);
            if (entry->state.closed) release(msg.session, entry);
            if (verdict) return {to_json(*verdict).dump()};
            return {};
        } catch (const ProtocolError& e) {
            if (entry->state.closed || entry->state.snapshots.empty()) release(msg.session, entry);
            return {error_message(msg.session, e.what(), e.fatal())};
        }
    }

    /// Drops sessions idle for longer than the timeout; returns how many.
    std::size_t reap(Clock::time_point now = Clock::now()) {
        std::lock_guard lock(mu_);
        std::size_t n = 0;
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if (now - it->second->touched > std::chrono::milliseconds(cfg_.session_timeout_ms)) {
                it = sessions_.erase(it);
                ++n;
            } else {
                ++it;
            }
        }
        return n;
    }

    std::size_t active() const {
        std::lock_guard lock(mu_);
        return sessions_.size();
    }

private:
    struct Entry {
        std::mutex mu;
        SessionState state;
        Clock::time_point touched;
    };

    // seq 0 opens a session; later messages must find an open one.
    std::shared_ptr<Entry> acquire(const SnapshotMsg& msg, Clock::time_point now) {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(msg.session);
        if (it == sessions_.end()) {
            if (msg.seq != 0) return nullptr;
            it = sessions_.emplace(msg.session, std::make_shared<Entry>()).first;
        }
        it->second->touched = now;
        return it->second;
    }

    void release(const std::string& token, const std::shared_ptr<Entry>& entry) {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(token);
        if (it != sessions_.end() && it->second == entry) sessions_.erase(it);
    }

    ReferenceList refs_;
    GuardConfig cfg_;
    ReferenceIndex index_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Entry>, std::less<>> sessions_;
};

}  // namespace phishlab
