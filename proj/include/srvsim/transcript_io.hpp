#pragma once

// Line-oriented transcript records shared with the CLI. One entry per line:
//
//   index,l1x,l1y,l1z,l2x,l2y,l2z,alpha,beta,c
//
// with the c field left empty under the box channel. Floats carry 9
// significant digits; a rerun with the same inputs is byte-identical.

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "srvsim/attack.hpp"

namespace srvsim {

namespace detail {

inline std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace detail

inline void write_transcript(std::ostream& os, const Transcript& tr) {
  os << "index,l1x,l1y,l1z,l2x,l2y,l2z,alpha,beta,c\n";
  for (const TranscriptEntry& e : tr.entries) {
    os << e.index << ',' << detail::format_g9(e.lambda1.x()) << ',' << detail::format_g9(e.lambda1.y())
       << ',' << detail::format_g9(e.lambda1.z()) << ',' << detail::format_g9(e.lambda2.x()) << ','
       << detail::format_g9(e.lambda2.y()) << ',' << detail::format_g9(e.lambda2.z()) << ','
       << e.alpha.value() << ',' << e.beta.value() << ',';
    if (e.cbit) os << e.cbit->value();
    os << '\n';
  }
}

inline std::string transcript_to_string(const Transcript& tr) {
  std::ostringstream oss;
  write_transcript(oss, tr);
  return oss.str();
}

}  // namespace srvsim
