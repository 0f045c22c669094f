#pragma once

#include <map>
#include <string>

namespace mir {

// The four judge prompt templates, loaded from editable text assets.
struct PromptLibrary {
    std::string pointwise;
    std::string agent_proposal_analysis;
    std::string agent_paper_analysis;
    std::string agent_relevance_judgment;

    static PromptLibrary load(const std::string& dir = default_prompt_dir());
    static std::string default_prompt_dir();
};

// Replaces every "{name}" whose name appears in slots; any other braced
// text is template prose and stays as written.
std::string fill_slots(const std::string& template_text,
                       const std::map<std::string, std::string>& slots);

// Drops the exemplar block (the "Exemplars" header line through the line
// ending "you will be evaluating.") for zero-shot prompts. Returns the
// template unchanged when the markers are absent.
std::string strip_exemplar_block(const std::string& template_text);

}  // namespace mir
