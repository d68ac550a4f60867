#include "biascope/conll.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <map>

#include "biascope/error.hpp"
#include "biascope/text.hpp"

namespace biascope::conll {

namespace {

std::string parse_doc_id(const std::string& line, std::size_t lineno) {
  // "#begin document (bn/0001); part 000" or "#begin document bn0001"
  std::string rest = line.substr(std::string("#begin document").size());
  auto open = rest.find('(');
  if (open != std::string::npos) {
    auto close = rest.find(')', open);
    if (close == std::string::npos)
      throw ParseError("conll line " + std::to_string(lineno) + ": unterminated document id");
    return rest.substr(open + 1, close - open - 1);
  }
  auto toks = text::split_whitespace(rest);
  if (toks.empty()) throw ParseError("conll line " + std::to_string(lineno) + ": missing document id");
  return toks[0];
}

struct OpenMention {
  int cluster;
  std::size_t start;
};

class DocBuilder {
 public:
  explicit DocBuilder(std::string id) { doc_.doc_id = std::move(id); }

  void add_row(const std::vector<std::string>& cols, std::size_t lineno) {
    std::string word, pos, ner, coref;
    if (cols.size() == 6) {
      word = cols[2];
      pos = cols[3];
      ner = cols[4];
      coref = cols[5];
    } else if (cols.size() >= 12) {
      word = cols[3];
      pos = cols[4];
      ner = cols[10];
      coref = cols.back();
    } else {
      throw ParseError("conll line " + std::to_string(lineno) + ": expected 6 or >=12 columns, got " +
                       std::to_string(cols.size()));
    }
    const std::size_t index = words_.size();
    parse_coref(coref, index, lineno);
    words_.push_back(word);
    pos_.push_back(pos);
    ner_.push_back(ner);
    if (pos != "-") has_pos_ = true;
    if (ner != "*" && ner != "-") has_ner_ = true;
  }

  void end_sentence(std::size_t lineno) {
    if (words_.empty()) return;
    if (!open_.empty())
      throw ParseError("conll line " + std::to_string(lineno) + ": unclosed coref mention in " +
                       doc_.doc_id);
    doc_.sentences.push_back(std::move(words_));
    pos_layer_.push_back(std::move(pos_));
    ner_layer_.push_back(std::move(ner_));
    words_.clear();
    pos_.clear();
    ner_.clear();
  }

  CorefDocument finish(std::size_t lineno) {
    end_sentence(lineno);
    if (has_pos_) doc_.pos = std::move(pos_layer_);
    if (has_ner_) doc_.ner = std::move(ner_layer_);
    doc_.validate();
    return std::move(doc_);
  }

 private:
  void parse_coref(const std::string& field, std::size_t index, std::size_t lineno) {
    if (field == "-") return;
    for (const auto& part : text::split(field, '|')) {
      const bool opens = !part.empty() && part.front() == '(';
      const bool closes = !part.empty() && part.back() == ')';
      std::string digits = part.substr(opens ? 1 : 0);
      if (closes) digits.pop_back();
      int id = 0;
      try {
        std::size_t used = 0;
        id = std::stoi(digits, &used);
        if (used != digits.size()) throw std::invalid_argument(digits);
      } catch (const std::exception&) {
        throw ParseError("conll line " + std::to_string(lineno) + ": bad coref field '" + field + "'");
      }
      const std::size_t sentence = doc_.sentences.size();
      if (opens && closes) {
        doc_.coref_spans.push_back({id, sentence, index, index});
      } else if (opens) {
        open_[id].push_back({id, index});
      } else if (closes) {
        auto it = open_.find(id);
        if (it == open_.end() || it->second.empty())
          throw ParseError("conll line " + std::to_string(lineno) + ": closing unopened mention " +
                           std::to_string(id));
        doc_.coref_spans.push_back({id, sentence, it->second.back().start, index});
        it->second.pop_back();
        if (it->second.empty()) open_.erase(it);
      } else {
        throw ParseError("conll line " + std::to_string(lineno) + ": bad coref field '" + field + "'");
      }
    }
  }

  CorefDocument doc_;
  text::Tokens words_;
  std::vector<std::string> pos_, ner_;
  std::vector<std::vector<std::string>> pos_layer_, ner_layer_;
  std::map<int, std::vector<OpenMention>> open_;
  bool has_pos_ = false;
  bool has_ner_ = false;
};

}  // namespace

std::vector<CorefDocument> read(std::istream& in) {
  std::vector<CorefDocument> docs;
  std::optional<DocBuilder> current;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("#begin document", 0) == 0) {
      if (current) throw ParseError("conll line " + std::to_string(lineno) + ": nested #begin document");
      current.emplace(parse_doc_id(line, lineno));
      continue;
    }
    if (line.rfind("#end document", 0) == 0) {
      if (!current) throw ParseError("conll line " + std::to_string(lineno) + ": #end document without #begin");
      docs.push_back(current->finish(lineno));
      current.reset();
      continue;
    }
    auto cols = text::split_whitespace(line);
    if (cols.empty()) {
      if (current) current->end_sentence(lineno);
      continue;
    }
    if (!current) throw ParseError("conll line " + std::to_string(lineno) + ": token row outside a document");
    current->add_row(cols, lineno);
  }
  if (current) throw ParseError("conll: missing #end document at end of input");
  return docs;
}

std::vector<CorefDocument> read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read(in);
}

void write(std::ostream& out, const std::vector<CorefDocument>& docs) {
  for (const auto& doc : docs) {
    doc.validate();
    out << "#begin document (" << doc.doc_id << "); part 000\n";
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      const auto& words = doc.sentences[s];
      std::vector<std::string> coref(words.size());
      auto append = [&](std::size_t i, const std::string& part) {
        if (!coref[i].empty()) coref[i] += '|';
        coref[i] += part;
      };
      // Openers of longer spans first, closers of shorter spans first, so
      // nested mentions with the same cluster id re-parse identically.
      std::vector<const CorefSpan*> spans;
      for (const auto& sp : doc.coref_spans)
        if (sp.sentence == s) spans.push_back(&sp);
      std::stable_sort(spans.begin(), spans.end(), [](const CorefSpan* a, const CorefSpan* b) {
        return (a->end - a->start) > (b->end - b->start);
      });
      for (const auto* sp : spans)
        if (sp->start != sp->end) append(sp->start, "(" + std::to_string(sp->cluster));
      for (const auto* sp : spans)
        if (sp->start == sp->end) append(sp->start, "(" + std::to_string(sp->cluster) + ")");
      for (auto it = spans.rbegin(); it != spans.rend(); ++it)
        if ((*it)->start != (*it)->end) append((*it)->end, std::to_string((*it)->cluster) + ")");

      for (std::size_t i = 0; i < words.size(); ++i) {
        out << doc.doc_id << '\t' << i << '\t' << words[i] << '\t'
            << (doc.pos ? (*doc.pos)[s][i] : "-") << '\t' << (doc.ner ? (*doc.ner)[s][i] : "*")
            << '\t' << (coref[i].empty() ? "-" : coref[i]) << '\n';
      }
      out << '\n';
    }
    out << "#end document\n";
  }
}

}  // namespace biascope::conll
