// Text trace format:
//
//   # <comment>                      (optional, any number, before the header)
//   RACTRACE v1 dim=<d> n=<count>
//   # session=<id> occurrence=<k>    (optional delimiters between records)
//   <id> <t> <d decimals> [topic=<int>] [parent=<int>] [key=<int>]
//
// Decimals are written with 9 significant digits.

#ifndef RAC_TRACE_IO_HPP
#define RAC_TRACE_IO_HPP

#include <iosfwd>
#include <string>

#include "rac/core.hpp"

namespace rac {

Trace read_trace(std::istream& in);
void write_trace(const Trace& trace, std::ostream& out);

Trace load_trace(const std::string& path);
void save_trace(const Trace& trace, const std::string& path);

std::string format_decimal9(double v);

}  // namespace rac

#endif  // RAC_TRACE_IO_HPP
