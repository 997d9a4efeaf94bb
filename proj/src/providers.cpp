#include "pancap/providers.hpp"

#include <cctype>

namespace pancap {

JudgeAnswer parse_judge_answer(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i])) == 0) {
    ++i;
  }
  std::string token;
  while (i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i])) != 0) {
    token.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(reply[i]))));
    ++i;
  }
  if (token == "yes") return JudgeAnswer::yes;
  if (token == "no") return JudgeAnswer::no;
  return JudgeAnswer::abstain;
}

}  // namespace pancap
