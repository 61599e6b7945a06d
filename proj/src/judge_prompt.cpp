#include "stepprune/http_clients.hpp"

namespace stepprune::adapters {

namespace {

// Labeling prompt with two few-shot exemplars. {sentence1} and {sentence2}
// are the only substitution slots; everything else renders byte-identical.
const std::string kJudgePromptTemplate = R"PT(Please determine whether the following two sentences are semanticly equivalent, and return 0: Not equivalent at all; 1: May not be equivalent; 2: Can't judge; 3: May be equivalent; 4: Exactly equivalent.
Please explain the reason, reflect, and provide a more accurate result.
Please output in the following Python dictionary format:
{
    "reasoning_step": "The reasoning process of the model",
    "result": "Final result" (int)
}
Question:
Sentence1: The inner sum is a geometric series with the first term \(\frac{{1}}{{2^{{k^2-k+1}}}}\) and common ratio \(\frac{{1}}{{2}}\), and it has \(2k\) terms. The sum of a geometric series is given by:\[\sum_{{n=a}}^{{a+b-1}} ar^n = a \frac{{1-r^b}}{{1-r}}\]\n
Sentence2: The inner sum \(\sum_{{n=k^2-k+1}}^{{k^2+k}} \frac{{1}}{{2^n}}\) is a geometric series with the first term \(\frac{{1}}{{2^{{k^2-k+1}}}}\) and common ratio \(\frac{{1}}{{2}}\), and it has \(2k\) terms. The sum of a geometric series is given by:\[\sum_{{n=a}}^{{a+r-1}} ar^n = a \frac{{1-r^r}}{{1-r}}\]\n
Output:
{
    "reasoning_step": "Sentence1 uses the formula \(\sum_{{n=a}}^{{a+b-1}} ar^n = a \frac{{1-r^b}}{{1-r}}\), while Sentence2 uses \(\sum_{{n=a}}^{{a+r-1}} ar^n = a \frac{{1-r^r}}{{1-r}}\). The variables and the structure of the formulas are different, which affects the semantic equivalence. Additionally, the limits of the summation in Sentence2 are explicitly given as \(\sum_{{n=k^2-k+1}}^{{k^2+k}} \frac{{1}}{{2^n}}\), which is not present in Sentence1. These differences indicate that the sentences are not semantically equivalent.",
    "result": 0
}
Question:
Sentence1: The amplitude is the distance from the midline to the maximum value (or the minimum value). Therefore, we can calculate the amplitude as follows:\[{{Amplitude}} = {{Maximum value}} - {{Midline}} = 3 - 1 = 2\] Since the amplitude is \(|a|\), we have:|a| = 2.  Since \(a\) is a positive constant, we conclude:a = 2\n
Sentence2: The amplitude of the sine wave is half the distance between the maximum value and the minimum value. Therefore, we can calculate the amplitude as follows:\[{{Amplitude}} = \frac{{{{Maximum value}} - {{Minimum value}}}}{{2}} = \frac{{3 - (-1)}}{{2}} = \frac{{3 + 1}}{{2}} = \frac{{4}}{{2}} = 2\] Since the amplitude is \(|a|\), we have:|a| = 2. Since \(a\) is a positive constant, we conclude: a = 2
Output:
{
    "reasoning_step": "Sentence1 defines the amplitude as the distance from the midline to the maximum value, calculating it as \({{Amplitude}} = {{Maximum value}} - {{Midline}} = 3 - 1 = 2\). Sentence2 defines the amplitude as half the distance between the maximum and minimum values, calculating it as \({{Amplitude}} = \frac{{{{Maximum value}} - {{Minimum value}}}}{{2}} = \frac{{3 - (-1)}}{{2}} = 2\). While both methods yield the same result (\(a = 2\)), the definitions and calculations are fundamentally different. This difference in methodology means the sentences are not semantically equivalent.",
    "result": 0
}
Question:
Sentence1: {sentence1}
Sentence2: {sentence2}

Output:
)PT";

void replace_once(std::string& text, const std::string& slot,
                  const std::string& value) {
  std::size_t pos = text.find(slot);
  if (pos == std::string::npos)
    throw Error("judge prompt template is missing slot " + slot);
  text.replace(pos, slot.size(), value);
}

}  // namespace

const std::string& JudgeClient::prompt_template() { return kJudgePromptTemplate; }

std::string JudgeClient::render_prompt(const std::string& sentence1,
                                       const std::string& sentence2) {
  // The later slot goes first so substituted text can never be mistaken
  // for a slot.
  std::string prompt = kJudgePromptTemplate;
  replace_once(prompt, "{sentence2}", sentence2);
  replace_once(prompt, "{sentence1}", sentence1);
  return prompt;
}

}  // namespace stepprune::adapters
