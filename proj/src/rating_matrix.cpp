#include "glrp/rating_matrix.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "glrp/errors.hpp"

namespace glrp {

RatingMatrix RatingMatrix::from_entries(int n_users, int n_items, std::vector<RatingEntry> entries,
                                        std::pair<double, double> rating_range) {
    if (n_users < 0 || n_items < 0) throw ArgumentError("negative matrix dimensions");
    RatingMatrix m;
    m.n_users_ = n_users;
    m.n_items_ = n_items;
    m.rating_range_ = rating_range;
    m.by_item_.assign(static_cast<std::size_t>(n_items), {});
    for (const RatingEntry& e : entries) {
        if (e.user < 0 || e.user >= n_users || e.item < 0 || e.item >= n_items)
            throw ValidationError("rating entry (" + std::to_string(e.user) + "," + std::to_string(e.item) +
                                  ") outside " + std::to_string(n_users) + "x" + std::to_string(n_items));
        if (e.rating < rating_range.first || e.rating > rating_range.second)
            throw ValidationError("rating " + std::to_string(e.rating) + " outside [" +
                                  std::to_string(rating_range.first) + "," + std::to_string(rating_range.second) +
                                  "] at (" + std::to_string(e.user) + "," + std::to_string(e.item) + ")");
        m.by_item_[static_cast<std::size_t>(e.item)].emplace_back(e.user, e.rating);
    }
    for (int i = 0; i < n_items; ++i) {
        auto& col = m.by_item_[static_cast<std::size_t>(i)];
        std::sort(col.begin(), col.end(), [](const LabeledUser& a, const LabeledUser& b) { return a.first < b.first; });
        auto dup = std::adjacent_find(col.begin(), col.end(),
                                      [](const LabeledUser& a, const LabeledUser& b) { return a.first == b.first; });
        if (dup != col.end())
            throw ValidationError("duplicate (user,item) pair (" + std::to_string(dup->first) + "," +
                                  std::to_string(i) + ")");
        m.n_entries_ += col.size();
    }
    return m;
}

std::span<const LabeledUser> RatingMatrix::labeled(int item) const {
    if (item < 0 || item >= n_items_) throw ArgumentError("item index " + std::to_string(item) + " out of range");
    return by_item_[static_cast<std::size_t>(item)];
}

std::vector<RatingEntry> RatingMatrix::entries() const {
    std::vector<RatingEntry> out;
    out.reserve(n_entries_);
    for (int i = 0; i < n_items_; ++i)
        for (const auto& [u, r] : by_item_[static_cast<std::size_t>(i)]) out.push_back({u, i, r});
    return out;
}

bool RatingMatrix::contains(int user, int item) const {
    auto col = labeled(item);
    auto it = std::lower_bound(col.begin(), col.end(), user,
                               [](const LabeledUser& a, int u) { return a.first < u; });
    return it != col.end() && it->first == user;
}

double RatingMatrix::global_mean() const {
    if (n_entries_ == 0) throw ArgumentError("global mean of an empty rating matrix");
    double sum = 0.0;
    for (const auto& col : by_item_)
        for (const auto& [u, r] : col) sum += r;
    return sum / static_cast<double>(n_entries_);
}

RatingMatrix RatingMatrix::transposed() const {
    std::vector<RatingEntry> swapped;
    swapped.reserve(n_entries_);
    for (int i = 0; i < n_items_; ++i)
        for (const auto& [u, r] : by_item_[static_cast<std::size_t>(i)]) swapped.push_back({i, u, r});
    return from_entries(n_items_, n_users_, std::move(swapped), rating_range_);
}

namespace {

struct RawLine {
    long user_id;
    long item_id;
    double rating;
};

std::vector<RawLine> read_raw(std::istream& source) {
    std::vector<RawLine> raw;
    std::string line;
    long line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<std::string_view, 4> fields;
        std::string_view rest(line);
        for (int f = 0; f < 4; ++f) {
            auto tab = rest.find('\t');
            if (f < 3 && tab == std::string_view::npos)
                throw ParseError("expected 4 tab-separated fields", line_no);
            fields[static_cast<std::size_t>(f)] = rest.substr(0, tab);
            rest = tab == std::string_view::npos ? std::string_view{} : rest.substr(tab + 1);
        }
        auto parse_long = [&](std::string_view s, const char* what) {
            long v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size())
                throw ParseError(std::string("bad ") + what + " '" + std::string(s) + "'", line_no);
            return v;
        };
        long u = parse_long(fields[0], "user id");
        long i = parse_long(fields[1], "item id");
        double r = 0.0;
        {
            std::string s(fields[2]);
            std::size_t pos = 0;
            try {
                r = std::stod(s, &pos);
            } catch (const std::exception&) {
                throw ParseError("bad rating '" + s + "'", line_no);
            }
            if (pos != s.size()) throw ParseError("bad rating '" + s + "'", line_no);
        }
        parse_long(fields[3], "timestamp");  // validated, then discarded
        if (u < 1 || i < 1) throw ParseError("ids must be 1-based positive integers", line_no);
        raw.push_back({u, i, r});
    }
    return raw;
}

}  // namespace

RatingMatrix parse_movielens(std::istream& source, std::optional<int> n_users, std::optional<int> n_items,
                             std::pair<double, double> rating_range) {
    std::vector<RawLine> raw = read_raw(source);
    long max_u = 0, max_i = 0;
    for (const RawLine& l : raw) {
        max_u = std::max(max_u, l.user_id);
        max_i = std::max(max_i, l.item_id);
    }
    if (raw.empty() && (!n_users || !n_items))
        throw ValidationError("empty input: n_users/n_items cannot be inferred and were not supplied");
    int nu = n_users.value_or(static_cast<int>(max_u));
    int ni = n_items.value_or(static_cast<int>(max_i));
    std::vector<RatingEntry> entries;
    entries.reserve(raw.size());
    for (const RawLine& l : raw)
        entries.push_back({static_cast<int>(l.user_id - 1), static_cast<int>(l.item_id - 1), l.rating});
    return RatingMatrix::from_entries(nu, ni, std::move(entries), rating_range);
}

RatingMatrix parse_movielens_file(const std::filesystem::path& file, std::optional<int> n_users,
                                  std::optional<int> n_items) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    return parse_movielens(in, n_users, n_items);
}

void write_movielens(const RatingMatrix& m, std::ostream& out) {
    std::ostringstream buf;
    buf.precision(17);
    for (const RatingEntry& e : m.entries())
        buf << (e.user + 1) << '\t' << (e.item + 1) << '\t' << e.rating << '\t' << 0 << '\n';
    out << buf.str();
}

void check_disjoint(const RatingMatrix& train, const RatingMatrix& test, const std::string& name) {
    if (train.n_users() != test.n_users() || train.n_items() != test.n_items())
        throw ValidationError("split " + name + ": train and test dimensions differ");
    for (int i = 0; i < test.n_items(); ++i)
        for (const auto& [u, r] : test.labeled(i))
            if (train.contains(u, i))
                throw ValidationError("split " + name + ": entry (" + std::to_string(u) + "," + std::to_string(i) +
                                      ") appears in both train and test");
}

std::vector<SplitPair> load_split_pairs(const std::filesystem::path& directory, SplitScheme scheme) {
    std::vector<std::string> stems;
    if (scheme == SplitScheme::u1_u5)
        stems = {"u1", "u2", "u3", "u4", "u5"};
    else
        stems = {"ua", "ub"};

    std::vector<SplitPair> pairs;
    for (const std::string& stem : stems) {
        auto base = directory / (stem + ".base");
        auto test = directory / (stem + ".test");
        for (const auto& f : {base, test})
            if (!std::filesystem::exists(f)) throw IoError("missing split file " + f.string());

        std::ifstream bin(base), tin(test);
        if (!bin) throw IoError("cannot open " + base.string());
        if (!tin) throw IoError("cannot open " + test.string());
        // Parse both with self-inferred dims first, then rebuild on shared dims.
        RatingMatrix btmp = parse_movielens(bin);
        RatingMatrix ttmp = parse_movielens(tin);
        int nu = std::max(btmp.n_users(), ttmp.n_users());
        int ni = std::max(btmp.n_items(), ttmp.n_items());
        SplitPair pair{RatingMatrix::from_entries(nu, ni, btmp.entries()),
                       RatingMatrix::from_entries(nu, ni, ttmp.entries()), stem};
        check_disjoint(pair.train, pair.test, stem);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace glrp
