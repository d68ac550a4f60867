#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "biascope/coref_eval.hpp"
#include "biascope/error.hpp"

namespace biascope::coref {

namespace {

const std::set<std::string>& pronoun_words() {
  static const std::set<std::string> words = {"he",   "she",     "him",     "her",  "his",   "hers",
                                              "himself", "herself", "they", "them", "their", "theirs",
                                              "themselves"};
  return words;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

std::string condition_name(Condition c) { return c == Condition::Pro ? "pro" : "anti"; }

std::string task_type_name(TaskType t) {
  return t == TaskType::SemanticsOnly ? "semantics_only" : "syntactic_cues";
}

TaskType parse_task_type(const std::string& name) {
  const auto n = text::lowercase(name);
  if (n == "semantics_only" || n == "type1" || n == "1") return TaskType::SemanticsOnly;
  if (n == "syntactic_cues" || n == "type2" || n == "2") return TaskType::SyntacticCues;
  throw UsageError("unknown task type '" + name + "' (expected semantics_only or syntactic_cues)");
}

Clustering WinoBiasInstance::gold() const {
  Clustering c;
  c.clusters.push_back({std::min(pronoun, occupation), std::max(pronoun, occupation)});
  return c;
}

std::vector<WinoBiasInstance> parse_winobias(std::istream& in, Condition condition, TaskType task_type) {
  std::vector<WinoBiasInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto raw = text::split_whitespace(line);
    if (raw.empty()) continue;
    auto fail = [&](const std::string& msg) { throw ParseError("winobias line " + std::to_string(line_no) + ": " + msg); };
    if (all_digits(raw.front())) raw.erase(raw.begin());

    WinoBiasInstance inst;
    inst.condition = condition;
    inst.task_type = task_type;
    std::vector<Mention> spans;
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::size_t open = kNone;
    for (std::string tok : raw) {
      // Opening brackets precede the word; a closing bracket may be followed
      // by attached punctuation, which becomes its own token.
      while (!tok.empty() && tok.front() == '[') {
        if (open != kNone) fail("nested '['");
        open = inst.tokens.size();
        tok.erase(0, 1);
      }
      const auto close = tok.find(']');
      std::string word = tok.substr(0, close);
      std::string rest = close == std::string::npos ? "" : tok.substr(close + 1);
      if (word.find('[') != std::string::npos) fail("'[' inside a word");
      if (!word.empty()) inst.tokens.push_back(word);
      if (close != std::string::npos) {
        if (open == kNone) fail("']' without matching '['");
        if (inst.tokens.size() == open) fail("empty bracketed span");
        spans.push_back({open, inst.tokens.size() - 1});
        open = kNone;
        if (rest.find_first_of("[]") != std::string::npos) fail("bracket after ']'");
        if (!rest.empty()) inst.tokens.push_back(rest);
      }
    }
    if (open != kNone) fail("unclosed '['");
    if (spans.size() != 2) fail("expected 2 bracketed spans, found " + std::to_string(spans.size()));
    auto is_pronoun = [&](const Mention& m) {
      return m.start == m.end && pronoun_words().count(text::lowercase(inst.tokens[m.start]));
    };
    const bool p0 = is_pronoun(spans[0]), p1 = is_pronoun(spans[1]);
    if (!p0 && !p1) fail("neither bracketed span is a pronoun");
    if (p0 && p1) fail("both bracketed spans are pronouns");
    inst.pronoun = p0 ? spans[0] : spans[1];
    inst.occupation = p0 ? spans[1] : spans[0];
    inst.instance_id = std::to_string(out.size() + 1);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<WinoBiasInstance> parse_winobias_file(const std::filesystem::path& path, Condition condition,
                                                  TaskType task_type) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_winobias(in, condition, task_type);
}

std::map<std::string, Clustering> read_predictions(std::istream& in) {
  std::map<std::string, Clustering> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::split_whitespace(line).empty()) continue;
    const std::string where = "predictions line " + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      const auto id = j.at("instance_id").is_string() ? j.at("instance_id").get<std::string>()
                                                      : std::to_string(j.at("instance_id").get<long long>());
      Clustering c;
      for (const auto& cluster : j.at("clusters")) {
        std::vector<Mention> ms;
        for (const auto& span : cluster) {
          if (!span.is_array() || span.size() != 2) throw ParseError(where + "span must be [start, end]");
          const auto s = span[0].get<long long>(), e = span[1].get<long long>();
          if (s < 0 || e < 0) throw ParseError(where + "negative span index");
          ms.push_back({static_cast<std::size_t>(s), static_cast<std::size_t>(e)});
        }
        c.clusters.push_back(std::move(ms));
      }
      try {
        c.validate();
      } catch (const ValidationError& e) {
        throw ValidationError(where + e.what());
      }
      if (!out.emplace(id, std::move(c)).second) throw ValidationError(where + "duplicate instance_id " + id);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + e.what());
    }
  }
  return out;
}

std::map<std::string, Clustering> read_predictions_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_predictions(in);
}

void write_predictions(std::ostream& out, const std::map<std::string, Clustering>& predictions) {
  for (const auto& [id, c] : predictions) {
    nlohmann::ordered_json j;
    j["instance_id"] = id;
    auto clusters = nlohmann::ordered_json::array();
    for (const auto& cl : c.clusters) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& m : cl) arr.push_back({m.start, m.end});
      clusters.push_back(arr);
    }
    j["clusters"] = clusters;
    out << j.dump() << '\n';
  }
}

}  // namespace biascope::coref
