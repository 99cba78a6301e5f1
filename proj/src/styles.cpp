#include "figrl/styles.hpp"

#include <array>
#include <stdexcept>

namespace figrl {

namespace {

const std::vector<StyleInfo> kStyles = {
    {Style::sarcasm, "sarcasm", "sarcastic", "not sarcastic", "Detecting mismatch"},
    {Style::humor, "humor", "humorous", "not humorous", "Humor cues"},
    {Style::offense, "offense", "offensive", "not offensive", "Offense cues"},
    {Style::metaphor, "metaphor", "metaphorical", "not metaphorical", "Metaphor cues"},
};

const std::string kTeacherSarcasm = R"(You are an expert at detecting sarcasm in images and text. Analyze the provided image and caption to determine if the pair is sarcastic or not sarcastic. Provide your reasoning in the following format:

Step 1: What the image shows: [Detailed description of the image content]
Step 2: What the caption says: [Quote or paraphrase the caption]
Step 3: Detecting mismatch: [Explain if there is a mismatch or congruence between the image and caption, and why]
Step 4: Inference of intent: [Conclude whether the intent is sarcastic or not based on the mismatch/congruence]
Step 5: [Provide your final answer in the form of 'sarcastic' or 'not sarcastic'])";

const std::string kTeacherHumor = R"(You are an expert at detecting humor in images and text. When given an image and text, analyze whether the content is humorous or not. Provide your reasoning process in the following format:

Step 1: What the image shows: [Detailed description of the image content]
Step 2: What the caption says: [Quote or paraphrase the caption]
Step 3: Humor cues: [Explain if there are elements such as exaggeration, wordplay, absurdity, or incongruity between the image and caption that make the content humorous]
Step 4: Inference of intent: [Conclude whether the intent is humorous or not based on the cues]
Step 5: [Provide your final answer in the form of "humorous" or "not humorous"])";

const std::string kTeacherOffense = R"(You are an expert at detecting offensive content in images and text. When given an image and text, analyze whether the content is offensive or not. Provide your reasoning process in the following format:

Step 1: What the image shows: [Detailed description of the image content]
Step 2: What the caption says: [Quote or paraphrase the caption]
Step 3: Offense cues: [Explain if there are elements such as hate speech, slurs, derogatory language, demeaning stereotypes, harassment, or explicit insults that make the content offensive]
Step 4: Context and intent: [Discuss whether the content was likely meant to harm, insult, or demean someone, or if it might be interpreted as offensive even without harmful intent]
Step 5: [Provide your final answer in the form of "offensive" or "not offensive"])";

const std::string kTeacherMetaphor = R"(You are an expert at detecting metaphors in images and text. When given an image and text, analyze whether the content uses metaphorical language or not. Provide your reasoning process in the following format:

Step 1: What the image shows: [Detailed description of the image content]
Step 2: What the caption says: [Quote or paraphrase the caption]
Step 3: Metaphor cues: [Explain if there are figurative expressions, symbolic comparisons, or non-literal meanings that connect the caption and the image]
Step 4: Interpretation: [Discuss what abstract idea, concept, or meaning the metaphor might be conveying]
Step 5: [Provide your final answer in the form of "metaphorical" or "not metaphorical"])";

const std::string kRlvrSarcasm = R"(You are an expert at detecting sarcasm in images and text. When given an image and text, analyze whether the content is sarcastic or not. Provide your reasoning process in the following format: Step 1: What the image shows: [Detailed description of the image content]. Step 2: What the caption says: [Quote or paraphrase the caption]. Step 3: Detecting mismatch: [Explain if there is a mismatch or congruence between the image and caption, and why]. Step 4: Inference of intent: [Conclude whether the intent is sarcastic or not based on the mismatch/congruence].
Your reasoning process and answer should be enclosed within <think> </think> and <answer> </answer> tags, respectively. Answer with either sarcastic or not sarcastic in the answer tags, i.e.,<think> reasoning process (Step 1 to Step 4) </think><answer> sarcastic/not sarcastic </answer>)";

const std::string kRlvrHumor = R"(You are an expert at detecting humor in images and text. When given an image and text, analyze whether the content is humorous or not. Provide your reasoning process in the following format: Step 1: What the image shows: [Detailed description of the image content]. Step 2: What the caption says: [Quote or paraphrase the caption]. Step 3: Humor cues: [Explain if there are elements such as exaggeration, wordplay, absurdity, or incongruity between the image and caption that make the content humorous]. Step 4: Inference of intent: [Conclude whether the intent is humorous or not based on the cues].
Your reasoning process and answer should be enclosed within <think> </think> and <answer> </answer> tags, respectively. Answer with either humorous or not humorous in the answer tags, i.e.,<think> reasoning process (Step 1 to Step 4) </think><answer> humorous/not humorous </answer>)";

const std::string kRlvrOffense = R"(You are an expert at detecting offensive content in images and text. When given an image and text, analyze whether the content is offensive or not. Provide your reasoning process in the following format: Step 1: What the image shows: [Detailed description of the image content]. Step 2: What the caption says: [Quote or paraphrase the caption]. Step 3: Offense cues: [Explain if there are elements such as hate speech, slurs, derogatory language, demeaning stereotypes, harassment, or explicit insults that make the content offensive]. Step 4: Context and intent: [Discuss whether the content was likely meant to harm, insult, or demean someone, or if it might be interpreted as offensive even without harmful intent].
Your reasoning process and answer should be enclosed within <think> </think> and <answer> </answer> tags, respectively. Answer with either offensive or not offensive in the answer tags, i.e.,<think> reasoning process (Step 1 to Step 4) </think><answer> offensive/not offensive </answer>)";

const std::string kRlvrMetaphor = R"(You are an expert at detecting metaphors in images and text. When given an image and text, analyze whether the content uses metaphorical language or not. Provide your reasoning process in the following format: Step 1: What the image shows: [Detailed description of the image content]. Step 2: What the caption says: [Quote or paraphrase the caption]. Step 3: Metaphor cues: [Explain if there are figurative expressions, symbolic comparisons, or non-literal meanings that connect the caption and the image]. Step 4: Interpretation: [Discuss what abstract idea, concept, or meaning the metaphor might be conveying].
Your reasoning process and answer should be enclosed within <think> </think> and <answer> </answer> tags, respectively. Answer with either metaphorical or not metaphorical in the answer tags, i.e.,<think> reasoning process (Step 1 to Step 4) </think><answer> metaphorical/not metaphorical </answer>)";

const std::array<const std::string*, 4> kTeacherTemplates = {
    &kTeacherSarcasm, &kTeacherHumor, &kTeacherOffense, &kTeacherMetaphor};
const std::array<const std::string*, 4> kRlvrTemplates = {
    &kRlvrSarcasm, &kRlvrHumor, &kRlvrOffense, &kRlvrMetaphor};

}  // namespace

const std::vector<StyleInfo>& list_styles() { return kStyles; }

const StyleInfo& style_info(Style id) {
  const auto index = static_cast<std::size_t>(id);
  if (index >= kStyles.size()) throw std::invalid_argument("unknown style");
  return kStyles[index];
}

const StyleInfo& style_by_name(std::string_view name) {
  for (const auto& s : kStyles) {
    if (s.name == name) return s;
  }
  throw std::invalid_argument("unknown style: " + std::string(name));
}

const std::string& render_prompt(Style style, PromptKind kind) {
  const auto index = static_cast<std::size_t>(style);
  if (index >= kStyles.size()) throw std::invalid_argument("unknown style");
  switch (kind) {
    case PromptKind::teacher_cot:
      return *kTeacherTemplates[index];
    case PromptKind::rlvr_tagged:
      return *kRlvrTemplates[index];
  }
  throw std::invalid_argument("unknown prompt kind");
}

std::string_view to_string(Style id) { return style_info(id).name; }

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::teacher_cot:
      return "teacher_cot";
    case PromptKind::rlvr_tagged:
      return "rlvr_tagged";
  }
  throw std::invalid_argument("unknown prompt kind");
}

Style style_from_string(std::string_view name) { return style_by_name(name).id; }

}  // namespace figrl
