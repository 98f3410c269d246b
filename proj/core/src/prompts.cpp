#include "kgrank/prompts.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "kgrank/errors.hpp"
#include "kgrank/util.hpp"

namespace kgrank {

namespace detail {
const std::map<std::string, std::string>& builtin_template_bodies();
}

namespace {

constexpr TemplateName kAllNames[] = {TemplateName::ner, TemplateName::answer_expansion,
                                      TemplateName::kg_answer, TemplateName::kg_answer_mintaka,
                                      TemplateName::judge};

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Walks the body, calling on_text for literal runs and on_slot for names.
template <typename OnText, typename OnSlot>
void scan(const std::string& body, OnText on_text, OnSlot on_slot) {
    std::size_t i = 0;
    while (i < body.size()) {
        char c = body[i];
        if ((c == '{' || c == '}') && i + 1 < body.size() && body[i + 1] == c) {
            on_text(std::string_view(&body[i], 1));
            i += 2;
            continue;
        }
        if (c == '{') {
            std::size_t j = i + 1;
            while (j < body.size() && is_ident_char(body[j])) ++j;
            if (j < body.size() && body[j] == '}' && j > i + 1) {
                on_slot(body.substr(i + 1, j - i - 1));
                i = j + 1;
                continue;
            }
        }
        on_text(std::string_view(&body[i], 1));
        ++i;
    }
}

}  // namespace

std::string_view to_string(TemplateName name) {
    switch (name) {
        case TemplateName::ner: return "ner";
        case TemplateName::answer_expansion: return "answer_expansion";
        case TemplateName::kg_answer: return "kg_answer";
        case TemplateName::kg_answer_mintaka: return "kg_answer_mintaka";
        case TemplateName::judge: return "judge";
    }
    return "unknown";
}

TemplateName template_name_from_string(std::string_view name) {
    for (auto n : kAllNames) {
        if (to_string(n) == name) return n;
    }
    throw ValidationError(fmt::format("unknown template '{}'", name));
}

PromptTemplate::PromptTemplate(TemplateName name, std::string body)
    : name_(name), body_(std::move(body)) {}

std::vector<std::string> PromptTemplate::placeholders() const {
    std::vector<std::string> names;
    scan(body_, [](std::string_view) {}, [&](const std::string& slot) {
        if (std::find(names.begin(), names.end(), slot) == names.end()) names.push_back(slot);
    });
    return names;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    std::string out;
    out.reserve(body_.size());
    scan(body_, [&](std::string_view text) { out += text; }, [&](const std::string& slot) {
        auto it = values.find(slot);
        if (it == values.end()) {
            throw ValidationError(fmt::format("template '{}' has unresolved placeholder {{{}}}",
                                              to_string(name_), slot));
        }
        out += it->second;
    });
    return out;
}

TemplateSet TemplateSet::builtin() {
    TemplateSet set;
    const auto& bodies = detail::builtin_template_bodies();
    for (auto name : kAllNames) {
        set.templates_.emplace(name, PromptTemplate(name, bodies.at(std::string(to_string(name)))));
    }
    return set;
}

TemplateSet TemplateSet::from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError(fmt::format("template directory {} does not exist", dir.string()));
    }
    TemplateSet set = builtin();
    for (auto name : kAllNames) {
        auto path = dir / (std::string(to_string(name)) + ".txt");
        if (std::filesystem::exists(path)) {
            set.templates_.insert_or_assign(name, PromptTemplate(name, read_file(path)));
        }
    }
    return set;
}

const PromptTemplate& TemplateSet::get(TemplateName name) const {
    return templates_.at(name);
}

}  // namespace kgrank
