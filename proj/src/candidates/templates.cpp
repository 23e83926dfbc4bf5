#include "candidates/templates.hpp"

#include "core/error.hpp"
#include "core/serialize.hpp"
#include "util/io.hpp"

namespace policysimp {

namespace {

const char* const kLexicalInstruction =
    "You simplify English sentences for readers with limited vocabulary. Replace difficult or rare "
    "words and phrases with simpler, more common ones. Keep the sentence structure, the word order "
    "and the meaning unchanged: do not split the sentence, do not drop information and do not add "
    "new content. Reply with the simplified sentence only.";

const char* const kOverallInstruction =
    "You simplify English sentences so that they are easy to read. You may replace difficult words, "
    "delete unimportant details, reorder phrases and split long sentences into shorter ones, as long "
    "as the main meaning is preserved. Reply with the simplified text only.";

GenerationTemplate lexical_template() {
  return GenerationTemplate{
      kLexicalInstruction,
      {
          {"The physician prescribed medication to alleviate the patient's chronic symptoms.",
           "The doctor gave medicine to ease the patient's long-lasting symptoms."},
          {"The legislation prohibits the disposal of hazardous substances in residential areas.",
           "The law bans the dumping of dangerous materials in areas where people live."},
          {"Archaeologists unearthed artifacts that illuminate the customs of ancient civilizations.",
           "Archaeologists dug up objects that show the customs of ancient peoples."},
      }};
}

GenerationTemplate overall_template() {
  return GenerationTemplate{
      kOverallInstruction,
      {
          {"Despite numerous obstacles, the expedition ultimately reached the summit of the mountain, "
           "where the climbers remained for several hours.",
           "The climbers faced many problems. In the end, they reached the top of the mountain and "
           "stayed there for a few hours."},
          {"The municipality allocated substantial funds to rehabilitate the deteriorating infrastructure.",
           "The city spent a lot of money to fix its old roads and bridges."},
          {"Volcanic eruptions, which release enormous quantities of ash, can precipitate dramatic "
           "alterations in the global climate.",
           "Volcanoes throw out huge amounts of ash. This can change the world's climate a lot."},
      }};
}

}  // namespace

void GenerationTemplate::validate() const {
  if (instruction.empty()) throw Error(ErrorCode::MissingTemplate, "generation template without instruction");
  if (demos.size() != 3)
    throw Error(ErrorCode::MissingTemplate,
                "generation template needs exactly 3 demonstrations, got " + std::to_string(demos.size()));
  for (const auto& d : demos)
    if (d.source.empty() || d.simplification.empty())
      throw Error(ErrorCode::MissingTemplate, "generation template has an empty demonstration");
}

std::string generation_user_turn(std::string_view source_text) {
  return "Sentence: " + std::string(source_text);
}

TemplateRegistry TemplateRegistry::builtin() {
  TemplateRegistry r;
  r.add(Policy::LexicalParaphrasing, lexical_template());
  r.add(Policy::OverallRewriting, overall_template());
  return r;
}

void TemplateRegistry::add(Policy policy, GenerationTemplate t) {
  t.validate();
  templates_[policy] = std::move(t);
}

void TemplateRegistry::load(Policy policy, const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MissingTemplate, path.string() + ": " + e.what());
  }
  GenerationTemplate t;
  t.instruction = get_field<std::string>(j, "instruction", path.string());
  for (const Json& d : get_field<Json>(j, "demos", path.string()))
    t.demos.push_back({get_field<std::string>(d, "source", path.string()),
                       get_field<std::string>(d, "simplification", path.string())});
  add(policy, std::move(t));
}

const GenerationTemplate& TemplateRegistry::get(Policy policy) const {
  auto it = templates_.find(policy);
  if (it == templates_.end())
    throw Error(ErrorCode::MissingTemplate,
                "no generation template registered for policy " + std::string(to_string(policy)));
  return it->second;
}

PromptBundle render_generation_prompt(const TemplateRegistry& registry, Policy policy,
                                      std::string_view source_text, ShotMode mode) {
  const GenerationTemplate& t = registry.get(policy);
  PromptBundle b;
  b.system = t.instruction;
  if (mode == ShotMode::FewShot)
    for (const auto& d : t.demos) b.shots.emplace_back(generation_user_turn(d.source), d.simplification);
  b.user = generation_user_turn(source_text);
  return b;
}

}  // namespace policysimp
