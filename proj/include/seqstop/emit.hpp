#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seqstop/errors.hpp"
#include "seqstop/summary.hpp"
#include "seqstop/version.hpp"

namespace seqstop {

enum class EmitFormat { csv, json };

struct ReferencePoint {
  double gap = 0.0;
  double closed_form = 0.0;
};

// Side data carried alongside a result table: seed/version provenance, an
// echo of the resolved spec, and the analytics overlay (recomputed at emit
// time by the caller, never cached).
struct EmitMetadata {
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::vector<std::pair<std::string, std::string>> spec_echo;
  std::optional<double> v_star;
  std::vector<ReferencePoint> reference;
};

using ResultRow = std::pair<double, RegretSummary>;

inline constexpr const char* kCsvHeader =
    "gap,mean_regret,se,q025,q25,q50,q75,q975,mean_tau,misid_rate,capped_fraction";

// Locale-independent decimal formatting, 17 significant digits.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& [gap, s] : rows) {
    os << format_double(gap) << ',' << format_double(s.mean_regret) << ','
       << format_double(s.std_error) << ',' << format_double(s.q025) << ','
       << format_double(s.q25) << ',' << format_double(s.q50) << ',' << format_double(s.q75)
       << ',' << format_double(s.q975) << ',' << format_double(s.mean_tau) << ','
       << format_double(s.misid_rate) << ',' << format_double(s.capped_fraction) << '\n';
  }
}

// Overlay companion table: the closed-form curve plus the flat V* reference.
inline void write_reference_csv(std::ostream& os, const EmitMetadata& meta) {
  os << "gap,closed_form_regret,v_star\n";
  const std::string vs = meta.v_star ? format_double(*meta.v_star) : "";
  for (const auto& r : meta.reference)
    os << format_double(r.gap) << ',' << format_double(r.closed_form) << ',' << vs << '\n';
}

inline nlohmann::json row_to_json(const ResultRow& row) {
  const RegretSummary& s = row.second;
  return nlohmann::json{{"gap", row.first},
                        {"mean_regret", s.mean_regret},
                        {"se", s.std_error},
                        {"q025", s.q025},
                        {"q25", s.q25},
                        {"q50", s.q50},
                        {"q75", s.q75},
                        {"q975", s.q975},
                        {"mean_tau", s.mean_tau},
                        {"misid_rate", s.misid_rate},
                        {"capped_fraction", s.capped_fraction}};
}

inline nlohmann::json table_to_json(const std::vector<ResultRow>& rows,
                                    const EmitMetadata& meta) {
  nlohmann::json spec_echo = nlohmann::json::object();
  for (const auto& [k, v] : meta.spec_echo) spec_echo[k] = v;
  nlohmann::json metadata{{"seed", meta.seed}, {"version", meta.version}, {"spec", spec_echo}};
  if (meta.v_star) metadata["v_star"] = *meta.v_star;
  if (!meta.reference.empty()) {
    nlohmann::json ref = nlohmann::json::array();
    for (const auto& r : meta.reference)
      ref.push_back({{"gap", r.gap}, {"closed_form_regret", r.closed_form}});
    metadata["reference"] = ref;
  }
  nlohmann::json out{{"metadata", metadata}, {"rows", nlohmann::json::array()}};
  for (const auto& row : rows) out["rows"].push_back(row_to_json(row));
  return out;
}

namespace detail {

inline void write_file_or_throw(const std::string& path, const std::string& payload) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("emit: cannot open '" + path + "' for writing");
  os << payload;
  os.flush();
  if (!os) throw io_error("emit: write failed for '" + path + "'");
}

}  // namespace detail

// path "-" writes to standard output. CSV mode additionally writes the
// overlay to <path>.ref.csv when a reference curve is present.
inline void emit(const std::vector<ResultRow>& rows, EmitFormat format, const std::string& path,
                 const EmitMetadata& meta) {
  if (format == EmitFormat::csv) {
    std::ostringstream main_payload;
    write_csv(main_payload, rows);
    if (path == "-") {
      std::cout << main_payload.str();
      std::cout.flush();
      return;
    }
    detail::write_file_or_throw(path, main_payload.str());
    if (!meta.reference.empty()) {
      std::ostringstream ref_payload;
      write_reference_csv(ref_payload, meta);
      detail::write_file_or_throw(path + ".ref.csv", ref_payload.str());
    }
    return;
  }
  const std::string payload = table_to_json(rows, meta).dump(2) + "\n";
  if (path == "-") {
    std::cout << payload;
    std::cout.flush();
    return;
  }
  detail::write_file_or_throw(path, payload);
}

}  // namespace seqstop
