#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bmet/common/time.hpp"

namespace bmet::tools {

struct MaintenanceTask {
    std::string task_id;
    std::string title;
    int interval_days = 0;
    std::optional<std::string> manual_chunk_id;
};

struct DeviceProfile {
    std::string device_model;
    std::vector<MaintenanceTask> tasks;
};

// `task_id | title | interval_days [| manual_chunk_id]` per line, '#' comments.
// Throws Error(InvalidArgument) on a malformed line or interval below 1.
DeviceProfile parse_device_profile(std::string_view text, std::string device_model);

class MaintenanceLibrary {
public:
    void add(DeviceProfile profile);
    // Profile files named <device_model>.txt.
    void load_dir(const std::filesystem::path& dir);
    // Throws Error(EmptyProfile) when the model has no profile.
    std::shared_ptr<const DeviceProfile> find(std::string_view device_model) const;
    bool has(std::string_view device_model) const;

private:
    std::map<std::string, std::shared_ptr<const DeviceProfile>, std::less<>> profiles_;
};

struct PlannedTask {
    std::string task_id;
    std::string title;
    int interval_days = 0;
    Date next_due;
    std::string source;  // "profile" or the manual chunk id
};

struct MaintenanceEvent {
    std::string uid;
    std::string task_id;
    std::string title;
    Date date;
};

struct MaintenancePlan {
    std::string device_model;
    Date created;
    int horizon_days = 0;
    std::vector<PlannedTask> tasks;
    // Sorted by date, then task_id.
    std::vector<MaintenanceEvent> events;
};

// Every task recurs at start + n * interval for n >= 1 while within the horizon,
// so each contributes floor(horizon / interval) events. Throws Error(EmptyProfile)
// and Error(InvalidHorizon).
MaintenancePlan generate_maintenance_plan(const DeviceProfile& profile, int horizon_days, Date start);

// RFC 5545 calendar: CRLF line endings, lines folded at 75 octets, one VEVENT
// per due date with UID "<task_id>-<yyyymmdd>".
std::string export_icalendar(const MaintenancePlan& plan);

// Destination for generated plans. The shipped default writes .ics files.
class CalendarProvider {
public:
    virtual ~CalendarProvider() = default;
    virtual void publish(const MaintenancePlan& plan) = 0;
};

class IcsFileCalendar final : public CalendarProvider {
public:
    explicit IcsFileCalendar(std::filesystem::path dir) : dir_(std::move(dir)) {}
    void publish(const MaintenancePlan& plan) override;
    std::filesystem::path path_for(std::string_view device_model) const;

private:
    std::filesystem::path dir_;
};

}  // namespace bmet::tools
