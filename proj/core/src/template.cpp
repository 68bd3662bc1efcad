#include "sizerforge/template.hpp"

#include <cctype>

#include "sizerforge/error.hpp"

namespace sizerforge {

namespace {

// Length of a `{identifier}` slot starting at text[i], or 0.
std::size_t slot_length(std::string_view text, std::size_t i) {
  if (text[i] != '{' || i + 2 >= text.size()) return 0;
  std::size_t j = i + 1;
  const auto c0 = static_cast<unsigned char>(text[j]);
  if (!(std::isalpha(c0) || c0 == '_')) return 0;
  while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
  if (j >= text.size() || text[j] != '}') return 0;
  return j - i + 1;
}

template <typename OnSlot>
std::string scan(std::string_view text, OnSlot&& on_slot) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
      out += '{';
      i += 2;
      continue;
    }
    if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      out += '}';
      i += 2;
      continue;
    }
    if (c == '{') {
      if (const std::size_t n = slot_length(text, i)) {
        out += on_slot(text.substr(i + 1, n - 2));
        i += n;
        continue;
      }
    }
    out += c;
    ++i;
  }
  return out;
}

}  // namespace

std::string render_template(std::string_view text, const PlaceholderLookup& lookup) {
  return scan(text, [&](std::string_view name) {
    auto v = lookup(name);
    if (!v) throw Error(ErrorCode::TemplateUnresolvable, "{" + std::string(name) + "}");
    return *v;
  });
}

std::string render_template(std::string_view text, const std::map<std::string, std::string>& values) {
  return render_template(text, [&](std::string_view name) -> std::optional<std::string> {
    auto it = values.find(std::string(name));
    if (it == values.end()) return std::nullopt;
    return it->second;
  });
}

std::set<std::string> template_placeholders(std::string_view text) {
  std::set<std::string> names;
  scan(text, [&](std::string_view name) {
    names.emplace(name);
    return std::string();
  });
  return names;
}

}  // namespace sizerforge
