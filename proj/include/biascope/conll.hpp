#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <vector>

#include "biascope/genderswap.hpp"

namespace biascope::conll {

// Reads `#begin document` / `#end document` delimited documents. Rows are
// whitespace separated; blank lines end sentences. Two layouts are accepted:
//   6 columns:  doc_id token_index word POS NER coref
//   >=12 columns (CoNLL-2012): word=3, POS=4, NER=10, coref=last
// `-` in the POS column means "no tag"; a document without any POS (or NER)
// tags gets no POS (or NER) layer.
std::vector<CorefDocument> read(std::istream& in);
std::vector<CorefDocument> read_file(const std::filesystem::path& path);

// Writes the 6-column layout, tab separated. read(write(docs)) == docs.
void write(std::ostream& out, const std::vector<CorefDocument>& docs);

}  // namespace biascope::conll
