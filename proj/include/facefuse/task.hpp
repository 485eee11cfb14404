#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace facefuse {

/// The four attribute tasks, in the fixed concatenation order.
enum class Task { id = 0, age = 1, race = 2, gender = 3 };

inline constexpr std::array<Task, 4> kAllTasks{Task::id, Task::age, Task::race, Task::gender};

std::string_view to_string(Task task);
/// Accepts the lowercase names above; ConfigError otherwise.
Task parse_task(std::string_view name);
/// "ID", "Age", "Race", "Gender" as used in report tables.
std::string_view display_name(Task task);

/// Four categorical labels carried by every sample.
struct Labels {
    int id = 0;
    int age = 0;
    int race = 0;
    int gender = 0;

    int get(Task task) const {
        switch (task) {
            case Task::id: return id;
            case Task::age: return age;
            case Task::race: return race;
            case Task::gender: return gender;
        }
        return 0;
    }

    friend bool operator==(const Labels&, const Labels&) = default;
};

inline constexpr int kAgeClasses = 3;
inline constexpr int kRaceClasses = 4;
inline constexpr int kGenderClasses = 2;

}  // namespace facefuse
