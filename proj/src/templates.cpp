#include <fstream>
#include <sstream>
#include <string_view>

#include "fsner/error.hpp"
#include "fsner/promptgen.hpp"

namespace fsner {
namespace {

#include "default_templates.inc"

struct TemplateFile {
  const char* name;
  std::string TemplateSet::*field;
};

constexpr TemplateFile kFiles[] = {
    {"system.txt", &TemplateSet::system},
    {"task.token_level.txt", &TemplateSet::task_token_level},
    {"task.span_level.txt", &TemplateSet::task_span_level},
    {"format.token_level.txt", &TemplateSet::format_token_level},
    {"format.span_level.txt", &TemplateSet::format_span_level},
    {"exemplar.txt", &TemplateSet::exemplar},
    {"user.txt", &TemplateSet::user},
};

}  // namespace

TemplateSet TemplateSet::defaults() {
  return TemplateSet{std::string(kDefaultSystem),           std::string(kDefaultTaskTokenLevel),
                     std::string(kDefaultTaskSpanLevel),    std::string(kDefaultFormatTokenLevel),
                     std::string(kDefaultFormatSpanLevel),  std::string(kDefaultExemplar),
                     std::string(kDefaultUser)};
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw PromptError("templates: not a directory: " + dir.string());
  TemplateSet set = defaults();
  for (const auto& f : kFiles) {
    const auto path = dir / f.name;
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PromptError("templates: cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    set.*f.field = buf.str();
  }
  return set;
}

void TemplateSet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& f : kFiles) {
    std::ofstream out(dir / f.name, std::ios::binary);
    if (!out) throw PromptError("templates: cannot write " + (dir / f.name).string());
    out << this->*f.field;
  }
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const std::string name(tmpl.substr(open + 2, close - open - 2));
    auto it = values.find(name);
    if (it == values.end()) throw PromptError("template: no value for placeholder {{" + name + "}}");
    out += it->second;
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

}  // namespace fsner
