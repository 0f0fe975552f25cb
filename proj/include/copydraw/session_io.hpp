#pragma once

// Session persistence.
//
// A session on disk is a directory holding
//   manifest.json          schema_version 1: blocks, conditions, file refs, exclusions
//   traces/*.json          {"samples": [[t,x,y],...], "template": [[x,y],...], "trial_duration_limit": s}
//   epochs/*.bin           32-byte header + little-endian float64, row-major channels x samples
//
// Epoch header: 8-byte magic "CDEPOCH1", uint64 n_channels, uint64 n_samples,
// float64 sample_rate.

#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "copydraw/types.hpp"

namespace copydraw {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::array<char, 8> kEpochMagic = {'C', 'D', 'E', 'P', 'O', 'C', 'H', '1'};
inline constexpr std::size_t kEpochHeaderBytes = 32;

static_assert(std::endian::native == std::endian::little, "epoch format assumes a little-endian host");

namespace detail {

inline json read_json_file(const fs::path& p) {
  if (!fs::exists(p)) fail(Errc::MissingFile, p.string());
  std::ifstream in(p);
  if (!in) fail(Errc::IoError, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(Errc::SchemaViolation, p.string() + ": " + e.what());
  }
}

inline void write_text_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot write " + p.string());
  out << text;
  if (!out) fail(Errc::IoError, "write failed for " + p.string());
}

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(Errc::SchemaViolation, where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(Errc::SchemaViolation, where + ": missing field \"" + key + "\"");
  return *it;
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(Errc::SchemaViolation, where + ": expected a number");
  return v.get<double>();
}

inline std::string string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(Errc::SchemaViolation, where + ": expected a string");
  return v.get<std::string>();
}

inline const json& array(const json& v, const std::string& where) {
  if (!v.is_array()) fail(Errc::SchemaViolation, where + ": expected an array");
  return v;
}

inline std::vector<std::string> string_list(const json& v, const std::string& where) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < array(v, where).size(); ++i)
    out.push_back(string(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

inline json trace_to_json(const Trace& tr) {
  json samples = json::array();
  for (const auto& s : tr.samples) samples.push_back({s.t, s.x, s.y});
  json templ = json::array();
  for (const auto& p : tr.templ) templ.push_back({p.x, p.y});
  return {{"samples", std::move(samples)}, {"template", std::move(templ)}, {"trial_duration_limit", tr.trial_duration_limit}};
}

/// Parses a trace document. Repeated timestamps collapse to the last sample.
inline Trace trace_from_json(const json& j, const std::string& where) {
  Trace tr;
  const auto& samples = detail::array(detail::field(j, "samples", where), where + ".samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string w = where + ".samples[" + std::to_string(i) + "]";
    const auto& row = detail::array(samples[i], w);
    if (row.size() != 3) fail(Errc::SchemaViolation, w + ": expected [t, x, y]");
    tr.samples.push_back({detail::number(row[0], w), detail::number(row[1], w), detail::number(row[2], w)});
  }
  const auto& templ = detail::array(detail::field(j, "template", where), where + ".template");
  for (std::size_t i = 0; i < templ.size(); ++i) {
    const std::string w = where + ".template[" + std::to_string(i) + "]";
    const auto& row = detail::array(templ[i], w);
    if (row.size() != 2) fail(Errc::SchemaViolation, w + ": expected [x, y]");
    tr.templ.push_back({detail::number(row[0], w), detail::number(row[1], w)});
  }
  tr.trial_duration_limit = detail::number(detail::field(j, "trial_duration_limit", where), where + ".trial_duration_limit");
  tr.samples = dedupe_samples(tr.samples, where + ": ");
  return tr;
}

inline void write_epoch_file(const NeuralEpoch& ep, const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot write " + p.string());
  std::array<char, kEpochHeaderBytes> header{};
  const std::uint64_t nch = static_cast<std::uint64_t>(ep.channels());
  const std::uint64_t ns = static_cast<std::uint64_t>(ep.samples());
  std::memcpy(header.data(), kEpochMagic.data(), 8);
  std::memcpy(header.data() + 8, &nch, 8);
  std::memcpy(header.data() + 16, &ns, 8);
  std::memcpy(header.data() + 24, &ep.sample_rate, 8);
  out.write(header.data(), header.size());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = ep.data;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (!out) fail(Errc::IoError, "write failed for " + p.string());
}

/// Reads the numeric payload only; names and modality come from the manifest.
inline NeuralEpoch read_epoch_file(const fs::path& p) {
  if (!fs::exists(p)) fail(Errc::MissingFile, p.string());
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + p.string());
  std::array<char, kEpochHeaderBytes> header{};
  in.read(header.data(), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size()))
    fail(Errc::SchemaViolation, p.string() + ": truncated epoch header");
  if (std::memcmp(header.data(), kEpochMagic.data(), 8) != 0) fail(Errc::SchemaViolation, p.string() + ": bad epoch magic");
  std::uint64_t nch = 0, ns = 0;
  NeuralEpoch ep;
  std::memcpy(&nch, header.data() + 8, 8);
  std::memcpy(&ns, header.data() + 16, 8);
  std::memcpy(&ep.sample_rate, header.data() + 24, 8);
  const auto expected = fs::file_size(p);
  if (nch == 0 || ns == 0 || expected != kEpochHeaderBytes + nch * ns * sizeof(double))
    fail(Errc::SchemaViolation, p.string() + ": payload size does not match header");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(static_cast<Eigen::Index>(nch),
                                                                            static_cast<Eigen::Index>(ns));
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (!in) fail(Errc::IoError, "read failed for " + p.string());
  ep.data = rm;
  return ep;
}

/// Loads and fully validates a session. `path` is the manifest or its directory.
inline Session load_session(const fs::path& path) {
  const fs::path manifest_path = fs::is_directory(path) ? path / "manifest.json" : path;
  const fs::path root = manifest_path.parent_path();
  const json m = detail::read_json_file(manifest_path);
  const std::string mw = manifest_path.filename().string();

  const json& ver = detail::field(m, "schema_version", mw);
  if (!ver.is_number_integer() || ver.get<int>() != kSchemaVersion)
    fail(Errc::SchemaViolation, mw + ": unsupported schema_version (expected 1)");

  Session s;
  s.id = detail::string(detail::field(m, "session_id", mw), mw + ".session_id");
  s.modality = parse_modality(detail::string(detail::field(m, "modality", mw), mw + ".modality"));
  std::vector<std::string> session_channels;
  if (m.contains("channel_names")) session_channels = detail::string_list(m["channel_names"], mw + ".channel_names");

  const auto& blocks = detail::array(detail::field(m, "blocks", mw), mw + ".blocks");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string bw = mw + ".blocks[" + std::to_string(b) + "]";
    const json& jb = blocks[b];
    Block blk;
    const json& idx = detail::field(jb, "index", bw);
    if (!idx.is_number_integer()) fail(Errc::SchemaViolation, bw + ".index: expected an integer");
    blk.index = idx.get<int>();
    blk.condition = parse_condition(detail::string(detail::field(jb, "condition", bw), bw + ".condition"));
    const auto& trials = detail::array(detail::field(jb, "trials", bw), bw + ".trials");
    for (std::size_t t = 0; t < trials.size(); ++t) {
      const std::string tw = bw + ".trials[" + std::to_string(t) + "]";
      const json& jt = trials[t];
      Trial tr;
      if (jt.contains("condition")) {
        const auto c = parse_condition(detail::string(jt["condition"], tw + ".condition"));
        if (c != blk.condition)
          fail(Errc::InvariantViolation, "block " + std::to_string(blk.index) + " trial " + std::to_string(t) +
                                             ": trial condition differs from its block");
      }
      if (jt.contains("excluded")) tr.excluded = parse_exclusion(detail::string(jt["excluded"], tw + ".excluded"));
      const fs::path trace_path = root / detail::string(detail::field(jt, "trace", tw), tw + ".trace");
      tr.trace = trace_from_json(detail::read_json_file(trace_path), trace_path.filename().string());
      if (jt.contains("epoch") && !jt["epoch"].is_null()) {
        const fs::path ep_path = root / detail::string(jt["epoch"], tw + ".epoch");
        NeuralEpoch ep = read_epoch_file(ep_path);
        ep.modality = s.modality;
        ep.channel_names = jt.contains("channel_names") ? detail::string_list(jt["channel_names"], tw + ".channel_names")
                                                        : session_channels;
        tr.neural = std::move(ep);
      }
      blk.trials.push_back(std::move(tr));
    }
    s.blocks.push_back(std::move(blk));
  }
  validate_session(s);
  return s;
}

/// Writes `s` under directory `dir` (created if needed).
inline void save_session(const Session& s, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "traces", ec);
  if (!ec) fs::create_directories(dir / "epochs", ec);
  if (ec) fail(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::string> session_channels;
  for (const auto& blk : s.blocks)
    for (const auto& tr : blk.trials)
      if (tr.neural && session_channels.empty()) session_channels = tr.neural->channel_names;

  json m;
  m["schema_version"] = kSchemaVersion;
  m["session_id"] = s.id;
  m["modality"] = std::string(to_string(s.modality));
  if (!session_channels.empty()) m["channel_names"] = session_channels;
  json blocks = json::array();
  for (const auto& blk : s.blocks) {
    json jb;
    jb["index"] = blk.index;
    jb["condition"] = std::string(to_string(blk.condition));
    json trials = json::array();
    for (std::size_t t = 0; t < blk.trials.size(); ++t) {
      const auto& tr = blk.trials[t];
      char stem[64];
      std::snprintf(stem, sizeof stem, "b%03d_t%02zu", blk.index, t);
      json jt;
      const std::string trace_rel = std::string("traces/") + stem + ".json";
      detail::write_text_file(dir / trace_rel, trace_to_json(tr.trace).dump());
      jt["trace"] = trace_rel;
      if (tr.neural) {
        const std::string ep_rel = std::string("epochs/") + stem + ".bin";
        write_epoch_file(*tr.neural, dir / ep_rel);
        jt["epoch"] = ep_rel;
        if (tr.neural->channel_names != session_channels) jt["channel_names"] = tr.neural->channel_names;
      }
      jt["excluded"] = std::string(to_string(tr.excluded));
      trials.push_back(std::move(jt));
    }
    jb["trials"] = std::move(trials);
    blocks.push_back(std::move(jb));
  }
  m["blocks"] = std::move(blocks);
  detail::write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace copydraw
