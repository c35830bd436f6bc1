#include "synthline/mock_provider.hpp"

#include "synthline/text.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <regex>
#include <set>

namespace synthline {

namespace {

struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    template <typename T, std::size_t N>
    const T& pick(const std::array<T, N>& pool) {
        return pool[next() % N];
    }
};

struct DomainLexicon {
    std::string_view domain;
    std::array<std::string_view, 4> systems;
    std::array<std::string_view, 6> objects;
    std::array<std::string_view, 4> actors;
};

constexpr std::array<DomainLexicon, 4> kLexicons{{
    {"Telecommunications",
     {"network management system", "billing platform", "call routing service", "subscriber portal"},
     {"call detail records", "subscriber profiles", "network alarms", "roaming agreements", "SIM provisioning requests",
      "bandwidth usage reports"},
     {"network operator", "subscriber", "field technician", "billing clerk"}},
    {"Healthcare",
     {"patient portal", "electronic health record system", "clinical scheduling service", "pharmacy module"},
     {"patient records", "lab results", "prescriptions", "appointment requests", "discharge summaries",
      "allergy alerts"},
     {"nurse", "patient", "attending physician", "pharmacist"}},
    {"Enterprise Data Management",
     {"data warehouse", "master data hub", "reporting service", "archival system"},
     {"customer master records", "audit logs", "data lineage metadata", "retention policies", "quarterly reports",
      "schema change requests"},
     {"data steward", "business analyst", "database administrator", "compliance officer"}},
    {"",
     {"system", "application", "platform", "service"},
     {"user accounts", "configuration settings", "transaction records", "notification messages", "usage reports",
      "uploaded documents"},
     {"user", "administrator", "operator", "manager"}},
}};

constexpr std::array<std::string_view, 12> kActions{
    "encrypt", "validate", "archive", "display", "export", "synchronize",
    "log every change to", "notify users about", "restrict access to", "back up", "audit", "reconcile"};

constexpr std::array<std::string_view, 8> kConditions{
    "within 2 seconds", "every night at 02:00", "after each update", "when a user requests it",
    "before transmission", "for at least 7 years", "during peak load", "upon login"};

constexpr std::array<std::string_view, 6> kBenefits{
    "I can finish my work without delays", "errors are caught early", "we stay compliant with regulations",
    "nobody loses data", "decisions rely on current information", "support effort goes down"};

constexpr std::array<std::string_view, 4> kVariationFocus{
    "vary the actors and triggers", "cover error and edge conditions",
    "mix quantitative and qualitative constraints", "address different subsystems"};

std::string capture(const std::string& haystack, const std::regex& re) {
    std::smatch m;
    return std::regex_search(haystack, m, re) ? m[1].str() : std::string();
}

std::string between(const std::string& s, std::string_view open, std::string_view close) {
    auto a = s.find(open);
    if (a == std::string::npos) return {};
    a += open.size();
    auto b = s.find(close, a);
    if (b == std::string::npos) return {};
    return text::trim(std::string_view(s).substr(a, b - a));
}

const DomainLexicon& lexicon_for(const std::string& domain) {
    for (const auto& lex : kLexicons) {
        if (lex.domain == domain) return lex;
    }
    return kLexicons.back();
}

std::string sentence(SplitMix64& rng, const DomainLexicon& lex, const std::string& format) {
    // One pick per statement, in a fixed draw order.
    const std::string action(rng.pick(kActions));
    const std::string object(rng.pick(lex.objects));
    if (format == "User Story") {
        const std::string actor(rng.pick(lex.actors));
        const std::string system(rng.pick(lex.systems));
        const std::string condition(rng.pick(kConditions));
        const std::string benefit(rng.pick(kBenefits));
        const bool vowel = std::string_view("aeiou").find(actor.front()) != std::string_view::npos;
        return std::string(vowel ? "As an " : "As a ") + actor + ", I want the " + system + " to " + action + " " +
               object + " " + condition + " so that " + benefit + ".";
    }
    const std::string system(rng.pick(lex.systems));
    const std::string condition(rng.pick(kConditions));
    const std::string verb = format == "Constrained NL" ? "shall" : "must";
    return "The " + system + " " + verb + " " + action + " " + object + " " + condition + ".";
}

}  // namespace

std::string MockProvider::id() const {
    return options_.low_diversity ? "mock-low-diversity" : "mock";
}

std::string MockProvider::complete(const ChatRequest& request) {
    switch (request.purpose) {
    case CallPurpose::Critic: return critique(request);
    case CallPurpose::Update: return revise(request);
    default: return generate(request);
    }
}

std::string MockProvider::generate(const ChatRequest& request) const {
    static const std::regex kCount(R"(exactly (\d+) requirements)");
    static const std::regex kDomain(R"(in the (.+?) domain)");
    static const std::regex kFormat(R"(Specification format: (.+?) \()");

    const std::string& prompt = request.user_text();
    std::string count_text = capture(prompt, kCount);
    const int count = count_text.empty() ? 1 : std::max(1, std::stoi(count_text));
    const auto& lex = lexicon_for(capture(prompt, kDomain));
    const std::string format = capture(prompt, kFormat);

    std::uint64_t key = text::fnv1a64(std::to_string(options_.seed));
    if (request.seed) key = text::fnv1a64(std::to_string(*request.seed), key);
    for (const auto& m : request.messages) key = text::fnv1a64(m.content, key);
    SplitMix64 rng{key};

    std::vector<std::string> items;
    if (options_.low_diversity && prompt.find(kMockDiversityDirective) == std::string::npos) {
        items.assign(static_cast<std::size_t>(count), sentence(rng, lex, format));
    } else {
        std::set<std::string> seen;
        while (static_cast<int>(items.size()) < count) {
            std::string s;
            for (int tries = 0; tries < 64; ++tries) {
                s = sentence(rng, lex, format);
                if (!seen.count(s)) break;
            }
            seen.insert(s);
            items.push_back(std::move(s));
        }
    }
    if (count == 1) return items.front();
    return nlohmann::json(items).dump();
}

std::string MockProvider::critique(const ChatRequest& request) const {
    const std::string& prompt = request.user_text();
    auto batch = nlohmann::json::parse(between(prompt, "<batch>", "</batch>"), nullptr, false);
    std::vector<std::string> items;
    if (batch.is_array()) {
        for (const auto& e : batch) {
            if (e.is_string()) items.push_back(e.get<std::string>());
        }
    }
    static const std::regex kLabel(R"re(belong to the "(.+?)" class)re");
    const std::string label = capture(prompt, kLabel);
    const std::set<std::string> unique(items.begin(), items.end());
    const std::size_t n = items.size();

    if (n == 0) {
        return "Format: the batch is empty or unreadable. Restate the required response structure explicitly.";
    }
    if (unique.size() == 1 && n > 1) {
        return "Repetition: all " + std::to_string(n) +
               " requirements in the batch are the same sentence. Ask explicitly for distinct requirements that "
               "differ in wording, actor, and intent.";
    }
    if (unique.size() * 10 < n * 8) {
        return "Repetition: " + std::to_string(n - unique.size()) + " of " + std::to_string(n) +
               " requirements duplicate others. Ask explicitly for distinct requirements.";
    }
    return "Diversity is adequate across " + std::to_string(n) + " requirements. Sharpen label fidelity by naming "
           "concrete " + (label.empty() ? std::string("label") : label) + " concerns and vary sentence structure.";
}

std::string MockProvider::revise(const ChatRequest& request) const {
    static const std::regex kRevision(R"(revision (\d+) of (\d+))");
    const std::string& prompt = request.user_text();
    std::string current = between(prompt, "<prompt>", "</prompt>");
    const std::string number = capture(prompt, kRevision);

    std::string revised = current;
    if (prompt.find("Repetition:") != std::string::npos &&
        revised.find(kMockDiversityDirective) == std::string::npos) {
        revised += "\n\n" + std::string(kMockDiversityDirective);
    }
    std::uint64_t key = text::fnv1a64(prompt, text::fnv1a64(std::to_string(options_.seed)));
    revised += "\nVariation " + (number.empty() ? std::string("1") : number) + ": " +
               std::string(kVariationFocus[key % kVariationFocus.size()]) + ".";
    return "<prompt>\n" + revised + "\n</prompt>";
}

EmbeddingVector MockProvider::embed_one(std::string_view input) const {
    EmbeddingVector v;
    v.values.assign(options_.embedding_dimension, 0.0);
    auto tokens = text::word_tokens(input);
    if (tokens.empty()) tokens.push_back(text::trim(input));
    for (const auto& t : tokens) v.values[text::fnv1a64(t) % options_.embedding_dimension] += 1.0;
    double norm = 0.0;
    for (double x : v.values) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& x : v.values) x /= norm;
    }
    return v;
}

std::vector<EmbeddingVector> MockProvider::embed(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

}  // namespace synthline
