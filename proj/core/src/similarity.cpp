#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <unordered_set>

#include "gradeforge/submissions.hpp"
#include "gradeforge/util.hpp"

namespace gradeforge::submissions {

namespace {

// Java, C and Portugol keywords; these survive identifier normalization.
const std::unordered_set<std::string>& keywords() {
  static const std::unordered_set<std::string> k = {
      "abstract", "boolean", "break", "byte", "case", "catch", "char", "class", "const", "continue",
      "default", "do", "double", "else", "enum", "extends", "final", "finally", "float", "for",
      "if", "implements", "import", "instanceof", "int", "interface", "long", "new", "null", "package",
      "private", "protected", "public", "return", "short", "static", "super", "switch", "this", "throw",
      "throws", "try", "void", "while", "true", "false", "struct", "unsigned", "signed", "sizeof",
      "typedef", "include", "main",
      "programa", "funcao", "inicio", "inteiro", "real", "caracter", "cadeia", "logico", "vazio",
      "se", "senao", "enquanto", "para", "faca", "escolha", "caso", "pare", "retorne", "const",
      "leia", "escreva", "limpa", "verdadeiro", "falso", "nao", "e", "ou", "inclua", "biblioteca"};
  return k;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::set<std::string> shingles(const std::vector<std::string>& tokens, std::size_t k) {
  std::set<std::string> out;
  if (tokens.empty()) return out;
  k = std::max<std::size_t>(1, k);
  const std::size_t width = std::min(k, tokens.size());
  for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
    std::string s;
    for (std::size_t j = i; j < i + width; ++j) {
      s += tokens[j];
      s += '\x1f';
    }
    out.insert(std::move(s));
  }
  return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& s : a) common += b.count(s);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace

std::vector<std::string> tokenize_source(std::string_view text, bool normalize_identifiers) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '/' && i + 1 < n && text[i + 1] == '/') {
      while (i < n && text[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < n && text[i + 1] == '*') {
      const auto end = text.find("*/", i + 2);
      i = end == std::string_view::npos ? n : end + 2;
    } else if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < n && text[j] != c) j += text[j] == '\\' ? 2 : 1;
      j = std::min(j + 1, n);
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else if (ident_start(c)) {
      std::size_t j = i;
      while (j < n && ident_char(text[j])) ++j;
      std::string word(text.substr(i, j - i));
      if (normalize_identifiers && !keywords().count(word)) word = "$id";
      out.push_back(std::move(word));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < n && (ident_char(text[j]) || text[j] == '.')) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else {
      out.emplace_back(1, c);
      ++i;
    }
  }
  return out;
}

double jaccard_similarity(std::string_view a, std::string_view b, const SimilarityOptions& options) {
  return jaccard(shingles(tokenize_source(a, options.normalize_identifiers), options.shingle),
                 shingles(tokenize_source(b, options.normalize_identifiers), options.shingle));
}

SimilarityReport similarity_groups(const SubmissionSet& set, const SimilarityOptions& options) {
  SimilarityReport report;
  std::vector<std::string> ids;
  std::vector<std::set<std::string>> sh;
  for (const auto& e : set.entries) {
    const std::string content = read_file(e.path);
    if (content.find('\0') != std::string::npos) {
      report.skipped.push_back(e.student_id);
      continue;
    }
    ids.push_back(e.student_id);
    sh.push_back(shingles(tokenize_source(content, options.normalize_identifiers), options.shingle));
  }

  std::vector<std::size_t> parent(ids.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::tuple<std::size_t, std::size_t, double>> hits;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const double s = jaccard(sh[i], sh[j]);
      if (s >= options.threshold) {
        hits.emplace_back(i, j, s);
        parent[find(i)] = find(j);
      }
    }
  }

  std::map<std::size_t, SimilarityGroup> groups;
  for (const auto& [i, j, s] : hits) groups[find(i)].pairs.push_back({ids[i], ids[j], s});
  for (auto& [root, g] : groups) {
    std::set<std::string> members;
    for (const auto& p : g.pairs) {
      members.insert(p.a);
      members.insert(p.b);
    }
    g.students.assign(members.begin(), members.end());
    report.groups.push_back(std::move(g));
  }
  std::sort(report.groups.begin(), report.groups.end(),
            [](const auto& a, const auto& b) { return a.students.front() < b.students.front(); });
  return report;
}

}  // namespace gradeforge::submissions
