#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace glrp {

struct RatingEntry {
    int user;
    int item;
    double rating;
};

// One labeled observation inside an item column: (user index, rating).
using LabeledUser = std::pair<int, double>;

/// Sparse user x item score matrix. Entries are grouped by item so that the
/// labeled user set of any item is available in O(l_i).
class RatingMatrix {
public:
    RatingMatrix() = default;

    // Validates index ranges, the rating range and (user,item) uniqueness.
    static RatingMatrix from_entries(int n_users, int n_items, std::vector<RatingEntry> entries,
                                     std::pair<double, double> rating_range = {1.0, 5.0});

    int n_users() const { return n_users_; }
    int n_items() const { return n_items_; }
    std::size_t n_entries() const { return n_entries_; }
    std::pair<double, double> rating_range() const { return rating_range_; }

    // Labeled users of one item, sorted by user index.
    std::span<const LabeledUser> labeled(int item) const;

    std::vector<RatingEntry> entries() const;
    bool contains(int user, int item) const;
    double global_mean() const;  // over all known entries; ArgumentError when empty

    RatingMatrix transposed() const;

private:
    int n_users_ = 0;
    int n_items_ = 0;
    std::size_t n_entries_ = 0;
    std::pair<double, double> rating_range_{1.0, 5.0};
    std::vector<std::vector<LabeledUser>> by_item_;
};

/// Train/test pair sharing one index space; entry sets are disjoint.
struct SplitPair {
    RatingMatrix train;
    RatingMatrix test;
    std::string name;
};

enum class SplitScheme { u1_u5, ua_ub };

// MovieLens tab-separated format: user_id \t item_id \t rating \t timestamp,
// 1-based ids. Indices come out 0-based (id - 1); timestamps are discarded.
// Dimensions are inferred as the max id seen unless overridden.
RatingMatrix parse_movielens(std::istream& source, std::optional<int> n_users = {},
                             std::optional<int> n_items = {},
                             std::pair<double, double> rating_range = {1.0, 5.0});
RatingMatrix parse_movielens_file(const std::filesystem::path& file, std::optional<int> n_users = {},
                                  std::optional<int> n_items = {});

// Inverse of parse_movielens up to entry-set equality; timestamps write as 0.
void write_movielens(const RatingMatrix& m, std::ostream& out);

std::vector<SplitPair> load_split_pairs(const std::filesystem::path& directory, SplitScheme scheme);

// Entry-set disjointness on (user, item); throws ValidationError otherwise.
void check_disjoint(const RatingMatrix& train, const RatingMatrix& test, const std::string& name);

}  // namespace glrp
