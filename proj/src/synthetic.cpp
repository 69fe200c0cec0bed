#include "phishguard/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "phishguard/error.hpp"
#include "phishguard/rng.hpp"

namespace phishguard::synthetic {
namespace {

using Bank = std::vector<const char*>;

const Bank kNames{"Alexis", "Chris", "Rita", "Sarah", "George", "John", "Mary", "James", "Linda", "Michael",
                  "Emma", "Olivia", "David", "Priya", "Ahmed", "Wei", "Sofia", "Lucas", "Maria", "Daniel"};
const Bank kGreetings{"Hi", "Hello", "Dear", "Hey"};
const Bank kDomains{"example.com", "mailhost.net", "corp-mail.org", "inbox.io"};

const Bank kUrgency{
    "This is an urgent notice and you must act immediately.",
    "Your access will expire in 24 hours unless you respond now.",
    "Final warning: your service has been suspended.",
    "Action is required within 30 minutes to avoid permanent deletion.",
    "We detected a security alert and your profile will be terminated today.",
    "Immediate action needed before the deadline expires.",
};
const Bank kCredential{
    "Please verify your password and login details.",
    "Confirm your username and PIN to restore access.",
    "Reset your credentials through our secure verification page.",
    "You must authenticate your login to keep using the service.",
    "Provide your password to complete the security verification.",
};
const Bank kFinancial{
    "Your bank account {ACCT} shows an unusual payment.",
    "A refund of ${AMT} is pending on your credit card.",
    "Your billing information for account {ACCT} is out of date.",
    "A wire transfer of ${AMT} was blocked on your account.",
    "Your invoice payment failed and funds are on hold.",
};
const Bank kLink{
    "Click here to continue: http://secure-update.{DOM}/login",
    "Download the attached form and follow the link inside.",
    "Click the link below to restore your account now.",
    "Visit https://verify-now.{DOM} to confirm your details.",
};
const Bank kPhishClose{
    "Call support at {PHONE} if you have questions.",
    "Failure to respond will result in account closure.",
    "Thank you for your prompt cooperation.",
    "Reply to {EMAIL} with the requested information.",
};

const Bank kBenignOpen{
    "I hope your week is going well.",
    "Thanks for the notes from yesterday.",
    "Quick update on the project timeline.",
    "Following up on our conversation this morning.",
    "Just wanted to share a few thoughts before the weekend.",
};
const Bank kBenignBody{
    "The team meeting is moved to Thursday afternoon in room 4.",
    "I attached the draft agenda for the quarterly planning session.",
    "Lunch on Friday sounds great, the new place near the office is open.",
    "The report looks good, I left a few comments on the second chapter.",
    "Can we review the slides together before the presentation?",
    "The library book club picks a new novel next month.",
    "Our garden project needs volunteers for the spring planting.",
    "The conference schedule was shared with the whole group.",
    "Please bring the printed handouts to the workshop.",
    "The photos from the trip are in the shared folder.",
    "The kids enjoyed the museum visit and the picnic afterwards.",
    "Let me know which dates work for the holiday dinner.",
};
const Bank kBenignClose{
    "Talk soon.",
    "Best regards.",
    "See you at the meeting.",
    "Cheers, and have a nice evening.",
    "You can reach me at {PHONE} later today.",
    "Send any edits to {EMAIL} when you get a chance.",
};

const char* pick(Rng& rng, const Bank& bank) { return bank[rng.uniform_index(bank.size())]; }

std::string digits(Rng& rng, std::size_t n) {
  std::string s;
  s.push_back(static_cast<char>('1' + rng.uniform_index(9)));
  while (s.size() < n) s.push_back(static_cast<char>('0' + rng.uniform_index(10)));
  return s;
}

std::string fill(std::string s, Rng& rng) {
  auto replace = [&](const std::string& key, auto make) {
    for (std::size_t at = s.find(key); at != std::string::npos; at = s.find(key, at)) {
      const std::string v = make();
      s.replace(at, key.size(), v);
      at += v.size();
    }
  };
  replace("{ACCT}", [&] { return digits(rng, 8 + rng.uniform_index(5)); });
  replace("{AMT}", [&] { return digits(rng, 3) + ".00"; });
  replace("{DOM}", [&] { return std::string(pick(rng, kDomains)); });
  replace("{PHONE}", [&] { return digits(rng, 3) + "-" + digits(rng, 3) + "-" + digits(rng, 4); });
  replace("{EMAIL}", [&] {
    std::string name = pick(rng, kNames);
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return name + "." + digits(rng, 2) + "@" + pick(rng, kDomains);
  });
  return s;
}

std::string greeting(Rng& rng) { return std::string(pick(rng, kGreetings)) + " " + pick(rng, kNames) + ","; }

std::string phishing(Rng& rng) {
  std::vector<std::string> parts{greeting(rng)};
  // Every phishing mail carries at least two cue families, most carry more.
  std::vector<const Bank*> families{&kUrgency, &kCredential, &kFinancial, &kLink};
  rng.shuffle(std::span<const Bank*>(families));
  const std::size_t n_fam = 2 + rng.uniform_index(3);
  for (std::size_t i = 0; i < n_fam; ++i) parts.emplace_back(pick(rng, *families[i]));
  if (rng.bernoulli(0.5)) parts.emplace_back(pick(rng, kPhishClose));
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back(' ');
    out += p;
  }
  return fill(out, rng);
}

std::string benign(Rng& rng) {
  std::string out = greeting(rng);
  out += ' ';
  out += pick(rng, kBenignOpen);
  const std::size_t n_body = 1 + rng.uniform_index(3);
  for (std::size_t i = 0; i < n_body; ++i) {
    out += ' ';
    out += pick(rng, kBenignBody);
  }
  out += ' ';
  out += pick(rng, kBenignClose);
  return fill(out, rng);
}

}  // namespace

corpus::Dataset generate_corpus(const SyntheticSpec& spec) {
  if (spec.n < 2) throw PipelineError("synthetic", "corpus needs at least two records");
  if (!(spec.safe_fraction > 0.0 && spec.safe_fraction < 1.0)) {
    throw PipelineError("synthetic", "safe_fraction must lie in (0, 1)");
  }
  const auto n_safe = static_cast<std::size_t>(std::llround(static_cast<double>(spec.n) * spec.safe_fraction));
  std::vector<int> labels(spec.n, corpus::kPhishing);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_safe), corpus::kSafe);
  Rng order(derive_seed(spec.seed, "labels"));
  order.shuffle(std::span<int>(labels));

  std::vector<corpus::EmailRecord> records;
  records.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    records.push_back({id, labels[i] == corpus::kPhishing ? phishing(rng) : benign(rng), labels[i]});
  }
  return corpus::Dataset(std::move(records));
}

}  // namespace phishguard::synthetic
