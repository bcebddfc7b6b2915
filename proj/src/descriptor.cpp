#include "s3dc/descriptor.hpp"

namespace s3dc {

bool is_descriptor_charset(std::string_view text) noexcept {
  for (char c : text) {
    if (!(c == ' ' || (c >= 'a' && c <= 'z'))) return false;
  }
  return true;
}

std::string clamp_description(std::string_view raw, std::size_t budget) {
  std::string out;
  bool pending_space = false;
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') {
      ch = static_cast<char>(c - 'A' + 'a');
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    } else if (!(c >= 'a' && c <= 'z')) {
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ch);
  }
  if (out.size() > budget) out.resize(budget);
  return out;
}

}  // namespace s3dc
