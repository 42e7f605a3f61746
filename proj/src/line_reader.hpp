#pragma once

#include <istream>
#include <string>
#include <string_view>

#include "chokemap/error.hpp"
#include "text_util.hpp"

namespace chokemap::text {

/// Calls `fn(line, line_number)` for each non-blank, non-comment line with
/// surrounding whitespace removed. Errors raised without a line number get
/// the current one attached.
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    try {
      fn(line, number);
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(number, e.what());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InvalidArgument) throw;
      throw ParseError(number, e.what());
    }
  }
}

}  // namespace chokemap::text
