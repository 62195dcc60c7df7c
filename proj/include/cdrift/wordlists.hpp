// Bundled English word lists backing triplet filtering and light
// lemmatization: pronouns, a common-verb list (base forms), determiners, and
// auxiliaries. These are pragmatic engineering lists, not a linguistic
// resource; filtering quality is bounded by their coverage.
#pragma once

#include <string>
#include <string_view>
#include <unordered_set>

namespace cdrift {

inline const std::unordered_set<std::string>& pronoun_list() {
  static const std::unordered_set<std::string> kPronouns = {
      "i",        "me",       "my",        "mine",      "myself",
      "we",       "us",       "our",       "ours",      "ourselves",
      "you",      "your",     "yours",     "yourself",  "yourselves",
      "he",       "him",      "his",       "himself",   "she",
      "her",      "hers",     "herself",   "it",        "its",
      "itself",   "they",     "them",      "their",     "theirs",
      "themselves", "who",    "whom",      "whose",     "which",
      "that",     "this",     "these",     "those",     "one",
      "ones",     "someone",  "somebody",  "anyone",    "anybody",
      "everyone", "everybody", "nobody",   "noone",     "none",
      "something", "anything", "everything", "nothing"};
  return kPronouns;
}

// Base forms; inflection handling happens at lookup via verb_lemma below.
inline const std::unordered_set<std::string>& common_verb_list() {
  static const std::unordered_set<std::string> kVerbs = {
      // High-frequency general verbs.
      "be", "am", "is", "are", "was", "were", "been", "being",
      "have", "has", "had", "do", "does", "did", "done",
      "say", "said", "go", "went", "gone", "get", "got", "gotten",
      "make", "made", "know", "knew", "known", "think", "thought",
      "take", "took", "taken", "see", "saw", "seen", "come", "came",
      "want", "look", "use", "find", "found", "give", "gave", "given",
      "tell", "told", "work", "call", "try", "ask", "need", "feel",
      "felt", "become", "became", "leave", "left", "put", "mean",
      "meant", "keep", "kept", "let", "begin", "began", "begun",
      "seem", "help", "talk", "turn", "start", "show", "shown",
      "hear", "heard", "play", "run", "ran", "move", "like", "live",
      "believe", "hold", "held", "bring", "brought", "happen",
      "write", "wrote", "written", "provide", "sit", "sat", "stand",
      "stood", "lose", "lost", "pay", "paid", "meet", "met",
      "include", "continue", "set", "learn", "change", "lead", "led",
      "understand", "understood", "watch", "follow", "stop", "create",
      "speak", "spoke", "spoken", "read", "allow", "add", "spend",
      "spent", "grow", "grew", "grown", "open", "walk", "win", "won",
      "offer", "remember", "love", "consider", "appear", "buy",
      "bought", "wait", "serve", "die", "died", "send", "sent",
      "expect", "build", "built", "stay", "fall", "fell", "fallen",
      "cut", "reach", "kill", "remain", "suggest", "raise", "pass",
      "sell", "sold", "require", "report", "decide", "pull", "push",
      "return", "explain", "hope", "develop", "carry", "break",
      "broke", "broken", "receive", "agree", "support", "hit",
      "produce", "eat", "ate", "eaten", "cover", "catch", "caught",
      "draw", "drew", "drawn", "choose", "chose", "chosen", "cause",
      "listen", "realize", "involve",
      "prove", "proven", "proved", "wear", "wore", "worn", "accept",
      "admit", "affect", "announce", "argue", "arrest", "attack",
      "avoid", "ban", "beat", "blame", "block", "burn",
      "collect", "confirm", "connect", "contain", "control",
      "deny", "denied", "destroy", "discover", "discuss", "drop",
      "earn", "enter", "exist", "fail",
      "fight", "fought", "fill", "fix", "force", "forget", "forgot",
      "fund", "gain", "happen", "hate", "hide", "hid",
      "hidden", "hurt", "identify", "ignore", "imagine", "improve",
      "increase", "indicate", "inform", "intend", "introduce",
      "join", "jump", "laugh", "launch", "lay",
      "lie", "lied", "lift", "link", "lock", "manage",
      "mention", "miss", "notice", "obtain",
      "occur", "own", "perform", "pick", "prepare",
      "prevent", "promise", "promote", "protect",
      "publish", "quote", "refer", "refuse",
      "reject", "release", "remove", "repeat", "replace", "reply",
      "represent", "respond", "reveal", "rise",
      "rose", "risen", "save", "seek", "sought", "share", "shoot",
      "shot", "shut", "sleep", "slept", "smile",
      "spread", "stick", "stuck", "strike", "struck",
      "study", "succeed", "suffer", "suppose", "survive",
      "teach", "taught", "test", "thank", "threaten", "throw",
      "threw", "thrown", "touch", "train", "travel", "treat",
      "trust", "visit", "vote", "warn", "wash", "wonder", "worry",
      // Verbs frequent in misinformation narratives.  Noun-dominant
      // homographs (state, claim, supply, chip, plan, order, ...) are left
      // out on purpose: the pattern extractor scans for the first verb-like
      // token, and those words appear far more often as nouns in this
      // domain ("deep state", "the claim", "water supply").
      "leak", "fake", "stage", "orchestrate", "engineer", "design",
      "fabricate", "invent", "manufacture", "weaponize", "deploy",
      "infect", "vaccinate", "inject", "implant", "insert",
      "track", "trace", "monitor", "surveil", "spy",
      "censor", "silence", "suppress", "bury", "erase", "delete",
      "expose", "uncover", "brainwash", "manipulate",
      "deceive", "mislead", "poison", "contaminate", "sicken",
      "sterilize", "depopulate", "profit", "bribe", "corrupt",
      "rig", "steal", "stole", "stolen", "hack", "plant", "frame",
      "cure", "heal", "harm", "mutate", "alter", "modify", "patent",
      "mandate", "enforce", "target", "program"};
  return kVerbs;
}

inline const std::unordered_set<std::string>& determiner_list() {
  static const std::unordered_set<std::string> kDeterminers = {
      "the", "a",    "an",   "some", "any",   "all",   "no",    "every",
      "each", "either", "neither", "much", "many", "more", "most",
      "few",  "little", "several", "other", "such", "another",
      "both", "half", "enough"};
  return kDeterminers;
}

inline const std::unordered_set<std::string>& auxiliary_list() {
  static const std::unordered_set<std::string> kAux = {
      "be",    "am",    "is",    "are",   "was",   "were",  "been", "being",
      "have",  "has",   "had",   "having", "do",   "does",  "did",
      "will",  "would", "shall", "should", "can",  "could", "may",
      "might", "must",  "ought", "not",   "never", "also",  "just",
      "still", "even",  "always", "really", "now", "then",  "already"};
  return kAux;
}

// Tokens that terminate a target span in the offline triplet patterns.
inline const std::unordered_set<std::string>& clause_break_list() {
  static const std::unordered_set<std::string> kBreaks = {
      "and",  "or",    "but",     "because", "so",      "if",    "when",
      "while", "that",  "to",     "of",      "in",      "on",    "at",
      "by",   "for",   "with",    "from",    "as",      "into",  "about",
      "after", "before", "over",  "under",   "through", "between",
      "against", "during", "without", "within", "via",  "than",  "since",
      "until", "though", "although", "unless", "where", "how",   "why"};
  return kBreaks;
}

// Words that the plural stripper must leave alone despite a trailing "s".
inline const std::unordered_set<std::string>& plural_exception_list() {
  static const std::unordered_set<std::string> kExceptions = {
      "news",   "series", "species", "always", "perhaps", "whereas",
      "yes",    "is",     "was",     "has",    "does",    "goes",
      "its",    "this",   "thus",    "plus",   "us",      "as",
      "ss",     "less",   "unless",  "across", "towards", "besides",
      "sometimes", "indeed"};
  return kExceptions;
}

}  // namespace cdrift
