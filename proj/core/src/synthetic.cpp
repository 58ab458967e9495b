#include "finelt/synthetic.hpp"

#include <stdexcept>

#include "finelt/ner.hpp"
#include "finelt/rng.hpp"

namespace finelt {

namespace {

constexpr std::string_view kCarrierPrefix = "The evidence is current to ";

struct SlotValues {
  std::string name;
  std::string number;
  std::string term;
  std::string date;
};

std::string render(const std::string& tmpl, const SlotValues& slots) {
  std::string out;
  size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out += tmpl[i++];
      continue;
    }
    const size_t close = tmpl.find('}', i);
    if (close == std::string::npos) {
      throw std::runtime_error("unterminated placeholder in template: " + tmpl);
    }
    const std::string key = tmpl.substr(i + 1, close - i - 1);
    if (key == "name") out += slots.name;
    else if (key == "number") out += slots.number;
    else if (key == "term") out += slots.term;
    else if (key == "date") out += slots.date;
    else throw std::runtime_error("unknown placeholder {" + key + "}");
    i = close + 1;
  }
  return out;
}

std::vector<std::string> placeholders_of(const std::string& tmpl) {
  std::vector<std::string> keys;
  size_t i = 0;
  while ((i = tmpl.find('{', i)) != std::string::npos) {
    const size_t close = tmpl.find('}', i);
    if (close == std::string::npos) break;
    keys.push_back(tmpl.substr(i + 1, close - i - 1));
    i = close + 1;
  }
  return keys;
}

}  // namespace

std::string_view noise_carrier_prefix() { return kCarrierPrefix; }

SyntheticConfig SyntheticConfig::defaults() {
  SyntheticConfig c;
  c.names = {"Mara Ellison",  "Tomas Reyes",    "Ingrid Hale",
             "Viktor Lund",   "Priya Nair",     "Omar Haddad",
             "Lena Forsberg", "Daniel Okoye",   "Sofia Marchetti",
             "Ruth Calder",   "Ewan Blake",     "Nadia Petrova"};
  c.dates = {"January 2014",  "January 2017", "March 2015",    "March 2012",
             "May 2016",      "May 2011",     "July 2018",     "July 2013",
             "September 2015", "September 2019", "October 2017", "October 2012",
             "November 2013", "November 2016", "April 2012",    "April 2018"};
  c.numbers = {"46", "58", "73", "112", "218", "347",
               "29", "64", "81", "137", "505", "262"};
  c.terms = {"anemia",        "asthma",       "heart failure",
             "preterm birth", "migraine",     "chronic cough",
             "sleep apnea",   "low back pain"};
  c.source_templates = {
      "{name} and colleagues examined {number} records of patients with {term} .",
      "In total {number} women with {term} joined the study led by {name} .",
      "The team of {name} followed {number} adults treated for {term} .",
      "A trial run by {name} offered {number} children care for {term} .",
      "Records from {number} clinics describe {term} outcomes collected by {name} .",
  };
  // Target slots are limited to names, and every slot is surrounded by fixed
  // template words: the preceding window forces the value to be read off the
  // source rather than memorized jointly with other slots, and the trailing
  // words keep the name out of the sentence-final window. One template
  // carries no entity at all.
  c.target_templates = {
      "A review by {name} about the records was issued .",
      "We found that {name} led the women in the study .",
      "Researchers say {name} tracked the adults in the group .",
      "Children in the care of {name} joined the trial .",
      "About half of the clinics under {name} took part fully .",
      "No clear benefit was seen overall .",
  };
  // Closers and the noise carrier compete at the same position (after the
  // template sentence), so the trained next-sentence distribution mirrors
  // the corpus noise rate. The pool is wide so no single closer rivals the
  // carrier's share.
  c.target_closers = {
      "More evidence is needed .",
      "Further study was suggested .",
      "Results were broadly consistent .",
      "Longer follow up may help .",
      "Little harm was reported .",
      "Most sites reported on time .",
      "Costs were not assessed .",
      "Quality varied between sites .",
      "Dropout rates stayed low .",
      "Outcomes were judged reliable .",
      "Follow up ended early .",
      "Reporting was judged complete .",
      "Funding sources were disclosed .",
      "Protocols were registered in advance .",
      "Blinding was described poorly .",
      "Adherence was generally good .",
      "Harms were described briefly .",
      "Recruitment closed on schedule .",
      "Consent procedures were standard .",
      "Analyses followed the plan .",
  };
  return c;
}

void SyntheticConfig::validate() const {
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw std::runtime_error("noise rate out of range [0,1]");
  }
  if (names.empty() || dates.empty() || numbers.empty() || terms.empty()) {
    throw std::runtime_error("empty entity pool");
  }
  if (source_templates.empty() || target_templates.empty() ||
      target_closers.empty()) {
    throw std::runtime_error("empty template set");
  }
  for (const auto& tgt : target_templates) {
    for (const auto& key : placeholders_of(tgt)) {
      for (const auto& src : source_templates) {
        const auto src_keys = placeholders_of(src);
        if (std::find(src_keys.begin(), src_keys.end(), key) == src_keys.end()) {
          throw std::runtime_error("target placeholder {" + key +
                                   "} missing from a source template");
        }
      }
    }
  }
}

Corpus generate_synthetic(const SyntheticConfig& config) {
  GenerationLog log;
  return generate_synthetic(config, log);
}

Corpus generate_synthetic(const SyntheticConfig& config, GenerationLog& log) {
  config.validate();
  Rng rng(config.seed);
  Corpus corpus;
  corpus.reserve(config.n_examples);
  log.injected.assign(config.n_examples, std::nullopt);

  for (size_t i = 0; i < config.n_examples; ++i) {
    const auto& src_tmpl =
        config.source_templates[rng.next_below(config.source_templates.size())];
    const auto& tgt_tmpl =
        config.target_templates[rng.next_below(config.target_templates.size())];
    SlotValues slots;
    slots.name = config.names[rng.next_below(config.names.size())];
    slots.number = config.numbers[rng.next_below(config.numbers.size())];
    slots.term = config.terms[rng.next_below(config.terms.size())];
    slots.date = config.dates[rng.next_below(config.dates.size())];

    Example ex;
    ex.id = config.id_prefix + "-" + std::to_string(i);
    ex.source = render(src_tmpl, slots);
    ex.target = render(tgt_tmpl, slots);

    const auto& closer =
        config.target_closers[rng.next_below(config.target_closers.size())];
    const bool noisy = rng.next_double() < config.noise_rate;
    if (noisy) {
      // Candidate injections: pool dates whose surface is absent from the
      // source, so the injected entity is unsupported by construction.
      std::vector<const std::string*> candidates;
      for (const auto& d : config.dates) {
        EntitySpan probe{d, 0, d.size(), EntityKind::Date};
        if (!is_supported(probe, ex.source)) candidates.push_back(&d);
      }
      if (candidates.empty()) throw std::runtime_error("entity pool exhausted");
      const std::string& injected = *candidates[rng.next_below(candidates.size())];
      ex.target += " " + std::string(kCarrierPrefix) + injected + ".";
      log.injected[i] = injected;
    } else {
      ex.target += " " + closer;
    }
    ex.oracle_noisy = noisy;
    corpus.push_back(std::move(ex));
  }
  return corpus;
}

}  // namespace finelt
