#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "gateway/gateway.hpp"

namespace policysimp {

enum class ShotMode { ZeroShot, FewShot };

struct Demonstration {
  std::string source;
  std::string simplification;
};

struct GenerationTemplate {
  std::string instruction;  // the policy's system instruction
  std::vector<Demonstration> demos;  // exactly three

  void validate() const;
};

/// Formats the user turn that carries a sentence to simplify.
std::string generation_user_turn(std::string_view source_text);

class TemplateRegistry {
 public:
  // Registry holding the shipped templates for both policies.
  static TemplateRegistry builtin();

  void add(Policy policy, GenerationTemplate t);
  // JSON file: {"instruction": "...", "demos": [{"source", "simplification"} x3]}.
  void load(Policy policy, const std::filesystem::path& path);
  bool has(Policy policy) const { return templates_.contains(policy); }
  const GenerationTemplate& get(Policy policy) const;  // MissingTemplate

 private:
  std::map<Policy, GenerationTemplate> templates_;
};

PromptBundle render_generation_prompt(const TemplateRegistry& registry, Policy policy,
                                      std::string_view source_text, ShotMode mode);

}  // namespace policysimp
