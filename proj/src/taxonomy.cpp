#include "vibrancy/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

#include "vibrancy/errors.hpp"

namespace vibrancy::measures {

std::string normalize_type(const std::string& raw) {
    std::size_t begin = 0, end = raw.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(raw[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(raw[end - 1]))) --end;
    std::string out = raw.substr(begin, end - begin);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

const char* to_string(EventCategory c) {
    return c == EventCategory::Regular ? "regular" : "spontaneous";
}

const char* to_string(CrimeCategory c) {
    switch (c) {
        case CrimeCategory::Violent: return "violent";
        case CrimeCategory::NonViolent: return "nonviolent";
        case CrimeCategory::Vice: return "vice";
        default: return "other";
    }
}

namespace {

std::vector<std::string> read_list(const nlohmann::json& doc, const char* key,
                                   const std::string& path) {
    if (!doc.contains(key) || !doc[key].is_array()) {
        throw ParseError(path + ": missing list '" + key + "'");
    }
    std::vector<std::string> out;
    for (const auto& v : doc[key]) out.push_back(v.get<std::string>());
    return out;
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + std::string(e.what()));
    }
}

void fill_lookup(const std::vector<std::string>& types, std::unordered_set<std::string>& lookup) {
    lookup.clear();
    for (const auto& t : types) lookup.insert(normalize_type(t));
}

}  // namespace

void EventTaxonomy::finalize() {
    fill_lookup(regular_, regular_lookup_);
    fill_lookup(spontaneous_, spontaneous_lookup_);
}

EventTaxonomy EventTaxonomy::defaults() {
    EventTaxonomy t;
    t.regular_ = {
        // Public holiday
        "4th of July", "Labor Day", "Memorial Day", "New Year's Day", "New Year's Eve",
        "May Day", "Christmas Party", "Father's Day", "Mother's Day", "Halloween Party",
        // Religious
        "Church Service", "Communion", "Religious Event"};
    t.spontaneous_ = {
        // Community
        "Community Fun Day", "Easter Egg Hunt", "National Night Out", "Prom",
        "Spring Festival", "Arts & Crafts Show", "Health Fair", "Stop The Violence Crusade",
        "Dedication", "Serenade",
        // Personal
        "Baby Shower", "Birthday Party", "Graduation Party", "Repass", "Wedding Reception",
        "Wedding"};
    t.finalize();
    return t;
}

EventTaxonomy EventTaxonomy::from_json_file(const std::string& path) {
    nlohmann::json doc = load_json(path);
    EventTaxonomy t;
    for (const auto& s : read_list(doc, "public_holiday", path)) t.regular_.push_back(s);
    for (const auto& s : read_list(doc, "religious", path)) t.regular_.push_back(s);
    for (const auto& s : read_list(doc, "community", path)) t.spontaneous_.push_back(s);
    for (const auto& s : read_list(doc, "personal", path)) t.spontaneous_.push_back(s);
    t.finalize();
    return t;
}

EventCategory EventTaxonomy::classify(const std::string& raw_type) const {
    const std::string key = normalize_type(raw_type);
    if (regular_lookup_.count(key)) return EventCategory::Regular;
    if (spontaneous_lookup_.count(key)) return EventCategory::Spontaneous;
    throw InvalidInput("unknown event type: '" + raw_type + "'");
}

bool EventTaxonomy::known(const std::string& raw_type) const {
    const std::string key = normalize_type(raw_type);
    return regular_lookup_.count(key) || spontaneous_lookup_.count(key);
}

void CrimeTaxonomy::finalize() {
    fill_lookup(violent_, lookups_[0]);
    fill_lookup(nonviolent_, lookups_[1]);
    fill_lookup(vice_, lookups_[2]);
    fill_lookup(other_, lookups_[3]);
}

CrimeTaxonomy CrimeTaxonomy::defaults() {
    CrimeTaxonomy t;
    t.violent_ = {"Homicide", "Rape", "Sex Crime", "Robbery", "Armed Robbery",
                  "Aggravated Assault"};
    t.nonviolent_ = {"Burglary", "Theft", "Motor Vehicle Theft"};
    t.vice_ = {"Drug Violation", "Gambling", "Prostitution"};
    t.other_ = {"Assault", "Vandalism", "Fraud", "Arson", "Disorderly Conduct", "DUI",
                "Weapons Violation", "Public Drunkenness", "Trespassing"};
    t.finalize();
    return t;
}

CrimeTaxonomy CrimeTaxonomy::from_json_file(const std::string& path) {
    nlohmann::json doc = load_json(path);
    CrimeTaxonomy t;
    t.violent_ = read_list(doc, "violent", path);
    t.nonviolent_ = read_list(doc, "nonviolent", path);
    t.vice_ = read_list(doc, "vice", path);
    t.other_ = read_list(doc, "other", path);
    t.finalize();
    return t;
}

CrimeCategory CrimeTaxonomy::classify(const std::string& raw_type) const {
    const std::string key = normalize_type(raw_type);
    if (lookups_[0].count(key)) return CrimeCategory::Violent;
    if (lookups_[1].count(key)) return CrimeCategory::NonViolent;
    if (lookups_[2].count(key)) return CrimeCategory::Vice;
    if (lookups_[3].count(key)) return CrimeCategory::Other;
    throw InvalidInput("unknown crime type: '" + raw_type + "'");
}

bool CrimeTaxonomy::known(const std::string& raw_type) const {
    const std::string key = normalize_type(raw_type);
    for (const auto& lookup : lookups_) {
        if (lookup.count(key)) return true;
    }
    return false;
}

const std::vector<std::string>& CrimeTaxonomy::types(CrimeCategory c) const {
    switch (c) {
        case CrimeCategory::Violent: return violent_;
        case CrimeCategory::NonViolent: return nonviolent_;
        case CrimeCategory::Vice: return vice_;
        default: return other_;
    }
}

}  // namespace vibrancy::measures
