#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace sizerforge {

/// `{name}` slots are substituted; `{{` and `}}` emit literal braces. A brace
/// that does not open a well-formed `{identifier}` slot is copied verbatim.
using PlaceholderLookup = std::function<std::optional<std::string>(std::string_view)>;

/// Throws Error{TemplateUnresolvable} naming the first slot the lookup
/// cannot resolve.
std::string render_template(std::string_view text, const PlaceholderLookup& lookup);

std::string render_template(std::string_view text, const std::map<std::string, std::string>& values);

/// Names of every `{name}` slot in `text`, escapes excluded.
std::set<std::string> template_placeholders(std::string_view text);

}  // namespace sizerforge
