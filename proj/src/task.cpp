#include "facefuse/task.hpp"

#include "facefuse/error.hpp"

namespace facefuse {

std::string_view to_string(Task task) {
    switch (task) {
        case Task::id: return "id";
        case Task::age: return "age";
        case Task::race: return "race";
        case Task::gender: return "gender";
    }
    return "?";
}

Task parse_task(std::string_view name) {
    for (Task t : kAllTasks) {
        if (to_string(t) == name) return t;
    }
    throw ConfigError("unknown task '" + std::string(name) + "' (expected id, age, race or gender)");
}

std::string_view display_name(Task task) {
    switch (task) {
        case Task::id: return "ID";
        case Task::age: return "Age";
        case Task::race: return "Race";
        case Task::gender: return "Gender";
    }
    return "?";
}

}  // namespace facefuse
