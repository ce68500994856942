#include "bmet/tools/maintenance.hpp"

#include <algorithm>
#include <charconv>

#include "bmet/common/error.hpp"
#include "bmet/common/text.hpp"

namespace bmet::tools {

DeviceProfile parse_device_profile(std::string_view text, std::string device_model) {
    DeviceProfile profile;
    profile.device_model = std::move(device_model);
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split(t, '|');
        auto where = "maintenance line " + std::to_string(line_no);
        if (fields.size() < 3 || fields.size() > 4) throw Error(Errc::InvalidArgument, where + ": expected 3 or 4 fields");
        MaintenanceTask task;
        task.task_id = std::string(trim(fields[0]));
        task.title = std::string(trim(fields[1]));
        auto iv = trim(fields[2]);
        auto [p, ec] = std::from_chars(iv.data(), iv.data() + iv.size(), task.interval_days);
        if (ec != std::errc{} || p != iv.data() + iv.size() || task.interval_days < 1)
            throw Error(Errc::InvalidArgument, where + ": interval_days must be a positive integer");
        if (fields.size() == 4 && !trim(fields[3]).empty()) task.manual_chunk_id = std::string(trim(fields[3]));
        if (task.task_id.empty() || task.title.empty()) throw Error(Errc::InvalidArgument, where + ": empty field");
        profile.tasks.push_back(std::move(task));
    }
    return profile;
}

void MaintenanceLibrary::add(DeviceProfile profile) {
    auto model = profile.device_model;
    profiles_[model] = std::make_shared<const DeviceProfile>(std::move(profile));
}

void MaintenanceLibrary::load_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& ent : std::filesystem::directory_iterator(dir)) {
        if (ent.is_regular_file() && ent.path().extension() == ".txt") files.push_back(ent.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) add(parse_device_profile(read_file(f), f.stem().string()));
}

std::shared_ptr<const DeviceProfile> MaintenanceLibrary::find(std::string_view device_model) const {
    auto it = profiles_.find(device_model);
    if (it == profiles_.end())
        throw Error(Errc::EmptyProfile, "no maintenance profile for " + std::string(device_model));
    return it->second;
}

bool MaintenanceLibrary::has(std::string_view device_model) const {
    return profiles_.find(device_model) != profiles_.end();
}

MaintenancePlan generate_maintenance_plan(const DeviceProfile& profile, int horizon_days, Date start) {
    if (profile.tasks.empty()) throw Error(Errc::EmptyProfile, "maintenance profile has no tasks");
    if (horizon_days < 1) throw Error(Errc::InvalidHorizon, "horizon must be at least 1 day");
    MaintenancePlan plan;
    plan.device_model = profile.device_model;
    plan.created = start;
    plan.horizon_days = horizon_days;
    const std::chrono::sys_days origin{start};
    for (const auto& task : profile.tasks) {
        if (task.interval_days < 1) throw Error(Errc::InvalidArgument, "interval_days must be at least 1");
        plan.tasks.push_back({task.task_id, task.title, task.interval_days,
                              Date{origin + std::chrono::days{task.interval_days}},
                              task.manual_chunk_id.value_or("profile")});
        for (int offset = task.interval_days; offset <= horizon_days; offset += task.interval_days) {
            Date d{origin + std::chrono::days{offset}};
            plan.events.push_back({task.task_id + "-" + format_date_compact(d), task.task_id, task.title, d});
        }
    }
    std::sort(plan.events.begin(), plan.events.end(), [](const auto& a, const auto& b) {
        if (a.date != b.date) return a.date < b.date;
        return a.task_id < b.task_id;
    });
    return plan;
}

namespace {

std::string escape_text(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case ';': out += "\\;"; break;
            case ',': out += "\\,"; break;
            case '\n': out += "\\n"; break;
            case '\r': break;
            default: out += c;
        }
    }
    return out;
}

// Folds at 75 octets without splitting a UTF-8 sequence; continuation lines
// start with a single space.
void append_line(std::string& out, std::string_view line) {
    std::size_t limit = 75;
    while (line.size() > limit) {
        std::size_t cut = utf8_floor(line, limit);
        if (cut == 0) cut = limit;
        out.append(line.substr(0, cut));
        out += "\r\n ";
        line.remove_prefix(cut);
        limit = 74;
    }
    out.append(line);
    out += "\r\n";
}

}  // namespace

std::string export_icalendar(const MaintenancePlan& plan) {
    std::string out;
    append_line(out, "BEGIN:VCALENDAR");
    append_line(out, "VERSION:2.0");
    append_line(out, "PRODID:-//bmet//maintenance planner//EN");
    append_line(out, "CALSCALE:GREGORIAN");
    append_line(out, "X-WR-CALNAME:" + escape_text(plan.device_model + " maintenance"));
    const auto stamp = format_date_compact(plan.created) + "T000000Z";
    for (const auto& ev : plan.events) {
        append_line(out, "BEGIN:VEVENT");
        append_line(out, "UID:" + ev.uid);
        append_line(out, "DTSTAMP:" + stamp);
        append_line(out, "DTSTART;VALUE=DATE:" + format_date_compact(ev.date));
        append_line(out, "SUMMARY:" + escape_text(ev.title));
        append_line(out, "END:VEVENT");
    }
    append_line(out, "END:VCALENDAR");
    return out;
}

std::filesystem::path IcsFileCalendar::path_for(std::string_view device_model) const {
    return dir_ / (slugify(device_model) + "-maintenance.ics");
}

void IcsFileCalendar::publish(const MaintenancePlan& plan) {
    std::filesystem::create_directories(dir_);
    write_file_atomic(path_for(plan.device_model), export_icalendar(plan));
}

}  // namespace bmet::tools
