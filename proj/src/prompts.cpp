#include "subqrag/prompts.hpp"

namespace subqrag::prompts {

namespace {

const char* kJsonSuffixDecompose =
    R"(Respond with a strict JSON object of the form {"sub_questions": ["...", "..."]} and nothing else.)";

const char* kJsonSuffixClassify =
    R"(Respond with a strict JSON object of the form {"type": "core" | "background" | "follow_up"} and nothing else.)";

const char* kJsonSuffixCoverage =
    R"(Respond with a strict JSON object of the form {"covered": true | false, "quote": "..." | null} and nothing else.)";

}  // namespace

gateway::PromptTemplate decompose_template(int target_count) {
  std::string body =
      "Decompose the following complex question into a collection of around " +
      std::to_string(target_count) +
      " sub-questions that you think would be relevant to answer the complex question "
      "fully.\n\nComplex question: $question\nCollection of sub-questions:\n\n";
  body += kJsonSuffixDecompose;
  return {"decompose", std::move(body)};
}

gateway::PromptTemplate classify_template() {
  std::string body =
      "Based on the sub-question's relevance and functional role in answering the complex "
      "question, classify the sub-question into three types: core, background, and follow-up.\n"
      "\n"
      "The definitions of these three sub-question types are:\n"
      "(1) Core sub-questions:\n"
      " - They are central to the main topic and directly or partially address the complex "
      "question.\n"
      " - They are crucial for interpreting the logical reasoning of the complex question and "
      "provide essential insights required for answering the complex question.\n"
      " - They often involve multiple steps or perspectives, making them fundamental to "
      "generating a comprehensive and well-rounded response to the complex question.\n"
      "(2) Background sub-questions:\n"
      " - They are optional when answering the complex question, but they can provide "
      "additional context or background information that helps clarify the complex question.\n"
      " - Their primary role is to support the understanding of the main topic by offering "
      "supplementary evidence or information, though it is not strictly necessary for "
      "addressing the core aspects of the complex question.\n"
      "(3) Follow-up sub-questions:\n"
      " - They are not needed to answer the complex question.\n"
      " - They often arise after users receive an initial answer and seek further "
      "clarification or details.\n"
      " - They may explore specific aspects of the response in greater depth, but their "
      "answers can sometimes be out-of-scope or beyond the focus of the original complex "
      "question.\n"
      "\n"
      "Here are a few examples you can use for reference:\n"
      "$few-shot-examples\n"
      "\n"
      "Complex question: $question\n"
      "Sub-question: $sub-question\n"
      "Type classification:\n\n";
  body += kJsonSuffixClassify;
  return {"classify", std::move(body)};
}

gateway::PromptTemplate coverage_template() {
  std::string body =
      "You are given a piece of text and a question.\n"
      "Judge if there exists any part of the given text that can answer the question.\n"
      "If you believe the question can be answered, identify the text fragment that answers "
      "the question; otherwise, just return \"None\".\n"
      "\n"
      "Here are a few examples you can use for reference:\n"
      "$few-shot-examples\n"
      "\n"
      "Piece of text: $text\n"
      "Question: $sub-question\n"
      "Judgment:\n\n";
  body += kJsonSuffixCoverage;
  return {"coverage", std::move(body)};
}

const std::string& core_definition() {
  static const std::string def =
      "A core sub-question is central to the main topic and directly or partially addresses "
      "the main question. It is crucial for interpreting the logical reasoning of the main "
      "question and provides essential insights required for answering it. These "
      "sub-questions often involve multiple steps or perspectives, making them fundamental "
      "to generating comprehensive and well-rounded responses.";
  return def;
}

const std::vector<FixtureDecomposition>& fixture_decompositions() {
  using T = SubQuestionType;
  static const std::vector<FixtureDecomposition> samples = {
      {"How can human activity affect the carbon cycle?",
       {
           {"What human activities contribute to carbon emissions?", T::Core},
           {"How does deforestation affect the carbon cycle?", T::Core},
           {"What role does the burning of fossil fuels play in the carbon cycle?", T::Core},
           {"How do agricultural practices impact the carbon cycle?", T::Core},
           {"What is the effect of urbanization on the carbon cycle?", T::Core},
           {"How do industrial processes alter the carbon cycle?", T::Core},
           {"What is the impact of increased carbon dioxide levels on global warming?", T::Core},
           {"How does the alteration of the carbon cycle affect ocean chemistry?", T::Core},
           {"How can changes in land use affect the carbon cycle?", T::Core},
           {"What are the effects of waste management and landfill operations on the carbon cycle?",
            T::Core},
           {"How do energy production methods influence the carbon cycle?", T::Core},
           {"How can reforestation and afforestation impact the carbon cycle?", T::Core},
           {"What is the carbon cycle and how does it function?", T::Background},
           {"What are the main components of the carbon cycle?", T::Background},
           {"What are the natural sources of carbon emissions?", T::Background},
           {"What are the consequences of the carbon cycle disruption on wildlife?", T::FollowUp},
           {"How does the carbon cycle influence climate change?", T::FollowUp},
           {"What are the long-term effects of altered carbon cycles on Earth's ecosystems?",
            T::FollowUp},
           {"What are some ways to mitigate human impact on the carbon cycle?", T::FollowUp},
           {"What policies can be implemented to reduce carbon emissions?", T::FollowUp},
       }},
      {"How does reading foster long-term learning?",
       {
           {"How does the brain process and store information read from texts?", T::Core},
           {"How does reading comprehension contribute to knowledge retention?", T::Core},
           {"How does the complexity of text affect comprehension and memory retention?", T::Core},
           {"What role does prior knowledge and experience play in reading comprehension?",
            T::Core},
           {"How does note-taking while reading enhance long-term memory?", T::Core},
           {"What are the neurological benefits of regular reading?", T::Core},
           {"How does reading fiction versus non-fiction impact long-term learning?", T::Core},
           {"How does the frequency of reading affect long-term cognitive abilities?", T::Core},
           {"What role does visualization while reading play in memory retention?", T::Core},
           {"How can reading multiple sources on the same topic enhance understanding and "
            "retention?",
            T::Core},
           {"What are the long-term impacts of reading on academic performance?", T::Core},
           {"How does reading influence critical thinking and analytical skills over time?",
            T::Core},
           {"What strategies can be employed to improve reading habits for better long-term "
            "learning?",
            T::Core},
           {"What is the definition of long-term learning?", T::Background},
           {"What cognitive skills are involved in reading?", T::Background},
           {"How does active reading differ from passive reading?", T::Background},
           {"What types of reading materials are most effective for long-term learning?",
            T::FollowUp},
           {"What are the benefits of discussing or teaching others about what one has read?",
            T::FollowUp},
           {"What are the effects of digital versus physical reading on learning?", T::FollowUp},
           {"How does age affect the ability to learn from reading?", T::FollowUp},
       }},
      {"Why is a starving individual more susceptible to infectious disease than a "
       "well-nourished individual?",
       {
           {"How does malnutrition affect the immune system?", T::Core},
           {"How does protein-energy malnutrition impact immune cell function?", T::Core},
           {"What role do micronutrients play in immune system function?", T::Core},
           {"Which micronutrients are most important for a healthy immune response?", T::Core},
           {"How does deficiency in specific micronutrients affect susceptibility to infections?",
            T::Core},
           {"How does malnutrition alter the physical barriers of the body that prevent "
            "infection?",
            T::Core},
           {"What is the impact of malnutrition on the gut microbiome?", T::Core},
           {"How does the alteration of the gut microbiome in malnourished individuals affect "
            "immune function?",
            T::Core},
           {"What are the physiological changes in a malnourished body that increase infection "
            "risk?",
            T::Core},
           {"How does malnutrition affect the healing process after an infection?", T::Core},
           {"How does the severity and duration of malnutrition affect the level of increased "
            "susceptibility to infectious diseases?",
            T::Core},
           {"What is the definition of malnutrition?", T::Background},
           {"What are the key components of the immune system?", T::Background},
           {"What are the statistics on infection rates in malnourished versus well-nourished "
            "populations?",
            T::Background},
           {"What are common infectious diseases that affect malnourished individuals?",
            T::FollowUp},
           {"How do socioeconomic factors contribute to malnutrition and increased "
            "susceptibility to infectious diseases?",
            T::FollowUp},
           {"What interventions can reduce the impact of malnutrition on susceptibility to "
            "infectious diseases?",
            T::FollowUp},
           {"How effective are nutritional supplements in restoring immune function in "
            "malnourished individuals?",
            T::FollowUp},
           {"What are the long-term effects of childhood malnutrition on adult immune "
            "function?",
            T::FollowUp},
           {"What policies are effective in combating malnutrition and thus reducing "
            "susceptibility to infectious diseases?",
            T::FollowUp},
       }},
  };
  return samples;
}

std::string classification_few_shot(int count) {
  // Round-robin over the three types, so any count gets a balanced mix.
  struct Entry {
    const std::string* question;
    const std::string* subquestion;
    SubQuestionType type;
  };
  std::vector<Entry> pools[3];
  for (const auto& sample : fixture_decompositions()) {
    for (const auto& [sq_text, sq_type] : sample.subquestions) {
      pools[static_cast<int>(sq_type)].push_back({&sample.question, &sq_text, sq_type});
    }
  }
  const int order[3] = {static_cast<int>(SubQuestionType::Core),
                        static_cast<int>(SubQuestionType::Background),
                        static_cast<int>(SubQuestionType::FollowUp)};
  std::string out;
  std::size_t cursor[3] = {0, 0, 0};
  for (int emitted = 0; emitted < count; ++emitted) {
    const int slot = order[emitted % 3];
    const auto& pool = pools[slot];
    if (pool.empty()) break;
    const Entry& e = pool[cursor[slot] % pool.size()];
    ++cursor[slot];
    if (!out.empty()) out += "\n\n";
    out += "[Example " + std::to_string(emitted + 1) + "]\n";
    out += "Main question: " + *e.question + "\n";
    out += "Candidate sub-question: " + *e.subquestion + "\n";
    out += "Type: " + std::string(to_string(e.type));
  }
  return out;
}

std::string coverage_few_shot() {
  return "[Example 1]\n"
         "Sample text: The Amazon rainforest produces oxygen through photosynthesis and stores "
         "vast amounts of carbon in its biomass.\n"
         "Sample question: How do rainforests store carbon?\n"
         "Sample judgment: {\"covered\": true, \"quote\": \"stores vast amounts of carbon in its "
         "biomass\"}\n"
         "\n"
         "[Example 2]\n"
         "Sample text: The city council approved a new budget for road maintenance in March.\n"
         "Sample question: What causes earthquakes?\n"
         "Sample judgment: {\"covered\": false, \"quote\": null}\n"
         "\n"
         "[Example 3]\n"
         "Sample text: Electric cars are becoming cheaper, though charging infrastructure still "
         "varies widely by region.\n"
         "Sample question: How much does an electric car cost?\n"
         "Sample judgment: {\"covered\": false, \"quote\": null}";
}

}  // namespace subqrag::prompts
