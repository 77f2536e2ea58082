#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace tpmtl {

/// Counts primitive operation invocations on the installing thread.
/// Used to show which parts of the network a code path actually executes.
class OpCounter {
 public:
  class Scope {
   public:
    explicit Scope(OpCounter* counter);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    OpCounter* previous_;
  };

  [[nodiscard]] Scope install() { return Scope(this); }

  std::size_t count(std::string_view op) const;
  std::size_t total() const;
  const std::map<std::string, std::size_t, std::less<>>& counts() const { return counts_; }

  static void record(std::string_view op);

 private:
  std::map<std::string, std::size_t, std::less<>> counts_;
};

}  // namespace tpmtl
