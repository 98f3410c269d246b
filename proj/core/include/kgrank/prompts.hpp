#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgrank {

enum class TemplateName { ner, answer_expansion, kg_answer, kg_answer_mintaka, judge };

std::string_view to_string(TemplateName name);
TemplateName template_name_from_string(std::string_view name);

/// Text with `{placeholder}` slots. `{{` and `}}` render literal braces.
class PromptTemplate {
public:
    PromptTemplate(TemplateName name, std::string body);

    TemplateName name() const noexcept { return name_; }
    const std::string& body() const noexcept { return body_; }

    /// Placeholder names in order of first appearance.
    std::vector<std::string> placeholders() const;

    /// ValidationError when the body references a name missing from `values`.
    std::string render(const std::map<std::string, std::string>& values) const;

private:
    TemplateName name_;
    std::string body_;
};

/// The full set of templates the engine uses.
class TemplateSet {
public:
    /// Copies compiled in from templates/*.txt at build time.
    static TemplateSet builtin();
    /// Reads <dir>/<name>.txt; names without a file keep the built-in body.
    static TemplateSet from_directory(const std::filesystem::path& dir);

    const PromptTemplate& get(TemplateName name) const;

private:
    std::map<TemplateName, PromptTemplate> templates_;
};

}  // namespace kgrank
