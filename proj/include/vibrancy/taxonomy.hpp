#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace vibrancy::measures {

enum class EventCategory { Regular, Spontaneous };
enum class CrimeCategory { Violent, NonViolent, Vice, Other };

const char* to_string(EventCategory c);
const char* to_string(CrimeCategory c);

// Whitelist-backed classifier for block-party event types. Regular covers the
// public-holiday and religious lists; spontaneous covers community and
// personal. Lookups are case-insensitive on trimmed input; an unknown type
// raises InvalidInput naming the string.
class EventTaxonomy {
public:
    // City defaults, editable via the JSON config override.
    static EventTaxonomy defaults();
    static EventTaxonomy from_json_file(const std::string& path);

    EventCategory classify(const std::string& raw_type) const;
    bool known(const std::string& raw_type) const;

    const std::vector<std::string>& regular_types() const { return regular_; }
    const std::vector<std::string>& spontaneous_types() const { return spontaneous_; }

private:
    void finalize();

    std::vector<std::string> regular_;
    std::vector<std::string> spontaneous_;
    std::unordered_set<std::string> regular_lookup_;
    std::unordered_set<std::string> spontaneous_lookup_;
};

// Whitelist-backed UCR-style classifier for crime types.
class CrimeTaxonomy {
public:
    static CrimeTaxonomy defaults();
    static CrimeTaxonomy from_json_file(const std::string& path);

    CrimeCategory classify(const std::string& raw_type) const;
    bool known(const std::string& raw_type) const;

    const std::vector<std::string>& types(CrimeCategory c) const;

private:
    void finalize();

    std::vector<std::string> violent_, nonviolent_, vice_, other_;
    std::unordered_set<std::string> lookups_[4];
};

// Lookup normalization shared by both taxonomies: trim and lowercase.
std::string normalize_type(const std::string& raw);

}  // namespace vibrancy::measures
