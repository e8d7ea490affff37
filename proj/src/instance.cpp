// Copyright 2026 The mechmab Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mechmab/instance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mechmab {

const char* to_string(InstanceErrorKind kind) {
  switch (kind) {
    case InstanceErrorKind::kEmpty: return "Empty";
    case InstanceErrorKind::kZeroCtr: return "ZeroCtr";
    case InstanceErrorKind::kCtrOutOfRange: return "CtrOutOfRange";
    case InstanceErrorKind::kValueOutOfRange: return "ValueOutOfRange";
    case InstanceErrorKind::kOwnershipOverlap: return "OwnershipOverlap";
    case InstanceErrorKind::kUnownedAd: return "UnownedAd";
    case InstanceErrorKind::kOwnerOutOfRange: return "OwnerOutOfRange";
    case InstanceErrorKind::kEmptyAgent: return "EmptyAgent";
    case InstanceErrorKind::kMalformed: return "Malformed";
  }
  return "Unknown";
}

namespace {

[[noreturn]] void fail(InstanceErrorKind kind, const std::string& detail) {
  throw InstanceError(kind, std::string(to_string(kind)) + ": " + detail);
}

bool in_unit_interval(double x) { return x >= 0.0 && x <= 1.0; }  // false for NaN

}  // namespace

AdLayout::AdLayout(std::size_t num_agents, std::size_t horizon, std::vector<std::size_t> owner)
    : num_agents_(num_agents), horizon_(horizon), owner_(std::move(owner)), ads_of_(num_agents) {
  for (std::size_t j = 0; j < owner_.size(); ++j) {
    if (owner_[j] >= num_agents_) {
      fail(InstanceErrorKind::kOwnerOutOfRange, "ad " + std::to_string(j));
    }
    ads_of_[owner_[j]].push_back(j);
  }
}

AdLayout AdLayout::with_horizon(std::size_t horizon) const {
  return AdLayout(num_agents_, horizon, owner_);
}

AdInstance ValidatedInstance::raw() const {
  AdInstance out;
  out.num_agents = num_agents();
  out.horizon = horizon();
  for (std::size_t j = 0; j < num_ads(); ++j) {
    out.ads.push_back(AdSpec{{owner(j)}, values_[j], ctrs_[j]});
  }
  return out;
}

ValidatedInstance validate_instance(const AdInstance& instance) {
  if (instance.num_agents == 0) fail(InstanceErrorKind::kEmpty, "no agents");
  if (instance.ads.empty()) fail(InstanceErrorKind::kEmpty, "no ads");
  if (instance.horizon == 0) fail(InstanceErrorKind::kEmpty, "horizon is zero");

  const std::size_t m = instance.ads.size();
  std::vector<std::size_t> owner(m);
  std::vector<double> values(m);
  std::vector<double> ctrs(m);
  std::vector<bool> agent_has_ad(instance.num_agents, false);

  for (std::size_t j = 0; j < m; ++j) {
    const AdSpec& ad = instance.ads[j];
    const std::string where = "ad " + std::to_string(j);
    if (ad.owners.empty()) fail(InstanceErrorKind::kUnownedAd, where);
    if (ad.owners.size() > 1) fail(InstanceErrorKind::kOwnershipOverlap, where + " has several owners");
    if (ad.owners.front() >= instance.num_agents) {
      fail(InstanceErrorKind::kOwnerOutOfRange, where);
    }
    if (!in_unit_interval(ad.value)) {
      fail(InstanceErrorKind::kValueOutOfRange, where + " value " + std::to_string(ad.value));
    }
    if (ad.ctr == 0.0) fail(InstanceErrorKind::kZeroCtr, where);
    if (!(ad.ctr > 0.0 && ad.ctr <= 1.0)) {
      fail(InstanceErrorKind::kCtrOutOfRange, where + " ctr " + std::to_string(ad.ctr));
    }
    owner[j] = ad.owners.front();
    values[j] = ad.value;
    ctrs[j] = ad.ctr;
    agent_has_ad[owner[j]] = true;
  }
  for (std::size_t i = 0; i < instance.num_agents; ++i) {
    if (!agent_has_ad[i]) fail(InstanceErrorKind::kEmptyAgent, "agent " + std::to_string(i));
  }
  return ValidatedInstance(AdLayout(instance.num_agents, instance.horizon, std::move(owner)),
                           std::move(values), std::move(ctrs));
}

ValidatedInstance make_instance(std::size_t num_agents, std::size_t horizon,
                                const std::vector<AdDescription>& ads) {
  AdInstance raw{num_agents, horizon, {}};
  for (const auto& ad : ads) raw.ads.push_back(AdSpec{{ad.owner}, ad.value, ad.ctr});
  return validate_instance(raw);
}

BidVector::BidVector(std::vector<double> bids) : bids_(std::move(bids)) {
  for (std::size_t j = 0; j < bids_.size(); ++j) {
    if (!in_unit_interval(bids_[j])) {
      fail(InstanceErrorKind::kValueOutOfRange, "bid on ad " + std::to_string(j));
    }
  }
}

RescaleCoefficients::RescaleCoefficients(std::vector<double> lambda) : lambda_(std::move(lambda)) {
  for (double l : lambda_) {
    if (!in_unit_interval(l)) throw std::invalid_argument("rescale coefficient outside [0, 1]");
  }
}

double agent_value(const AdLayout& layout, std::span<const double> bids, std::size_t agent,
                   std::span<const double> clicks) {
  double sum = 0.0;
  for (std::size_t j : layout.ads_of(agent)) sum += bids[j] * clicks[j];
  return sum;
}

double total_value(std::span<const double> bids, std::span<const double> clicks) {
  double sum = 0.0;
  for (std::size_t j = 0; j < bids.size(); ++j) sum += bids[j] * clicks[j];
  return sum;
}

std::vector<double> rescale(const AdLayout& layout, std::span<const double> bids,
                            std::span<const double> lambda) {
  if (lambda.size() != layout.num_agents()) {
    throw std::invalid_argument("one rescale coefficient per agent expected");
  }
  std::vector<double> out(bids.begin(), bids.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] *= lambda[layout.owner(j)];
  return out;
}

BidVector rescale_bids(const BidVector& bids, const RescaleCoefficients& lambda,
                       const AdLayout& layout) {
  return BidVector(rescale(layout, bids.view(), lambda.view()));
}

AdInstance parse_instance(std::string_view json_text) {
  using nlohmann::json;
  AdInstance out;
  try {
    const json doc = json::parse(json_text);
    out.num_agents = doc.at("agents").get<std::size_t>();
    out.horizon = doc.at("horizon").get<std::size_t>();
    for (const auto& ad : doc.at("ads")) {
      AdSpec spec;
      const auto& owner = ad.at("owner");
      if (owner.is_array()) {
        spec.owners = owner.get<std::vector<std::size_t>>();
      } else {
        spec.owners = {owner.get<std::size_t>()};
      }
      spec.value = ad.at("value").get<double>();
      spec.ctr = ad.at("ctr").get<double>();
      out.ads.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    fail(InstanceErrorKind::kMalformed, e.what());
  }
  return out;
}

AdInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(InstanceErrorKind::kMalformed, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_instance(buffer.str());
}

std::string dump_instance(const AdInstance& instance) {
  nlohmann::ordered_json doc;
  doc["agents"] = instance.num_agents;
  doc["horizon"] = instance.horizon;
  doc["ads"] = nlohmann::ordered_json::array();
  for (const auto& ad : instance.ads) {
    nlohmann::ordered_json entry;
    if (ad.owners.size() == 1) {
      entry["owner"] = ad.owners.front();
    } else {
      entry["owner"] = ad.owners;
    }
    entry["value"] = ad.value;
    entry["ctr"] = ad.ctr;
    doc["ads"].push_back(entry);
  }
  return doc.dump(2);
}

}  // namespace mechmab
