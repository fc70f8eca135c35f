#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pu {

// Finite binary symbol sequence, packed 64 bits per block. Digits are indexed
// from 0; formulas that speak of "the k-th digit" (1-based) use bit(k-1).
// Lengths are capped so scale tables and weight schedules stay in range.
class SymbolWord {
public:
    static constexpr std::size_t kMaxLength = 4096;

    SymbolWord() = default;
    explicit SymbolWord(std::string_view bits);          // e.g. "0110"
    static SymbolWord zeros(std::size_t n);
    static SymbolWord ones(std::size_t n);
    static SymbolWord repeat(std::string_view pattern, std::size_t n);  // total length n
    template <class Rng>
    static SymbolWord random(Rng& rng, std::size_t n) {
        SymbolWord w;
        for (std::size_t i = 0; i < n; ++i) w.push_back((rng() >> 13) & 1u);
        return w;
    }

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    int bit(std::size_t i) const {
        return static_cast<int>((blocks_[i >> 6] >> (i & 63)) & 1u);
    }
    void push_back(int b);
    void pop_back();

    SymbolWord prefix(std::size_t n) const;   // first n digits
    SymbolWord shift(std::size_t n) const;    // drop first n digits
    SymbolWord concat(const SymbolWord& tail) const;

    bool operator==(const SymbolWord& o) const;
    std::string to_string() const;

private:
    std::vector<std::uint64_t> blocks_;
    std::size_t size_ = 0;
};

// Length of the longest common prefix of i and j (the wedge).
std::size_t wedge(const SymbolWord& i, const SymbolWord& j);

}  // namespace pu
