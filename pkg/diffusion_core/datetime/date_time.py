import datetime

import pytz


def resolve_timezone(tz: str = "UTC"):
    '''pytz timezone for a report, ValueError for unknown names.'''
    try:
        return pytz.timezone(tz)
    except pytz.exceptions.UnknownTimeZoneError:
        raise ValueError(f"Invalid timezone: {tz}")


def make_timezone_aware(moment: datetime.datetime, tz: str = "UTC") -> datetime.datetime:
    '''Localizes a naive datetime to ``tz``; an aware one is converted to it.'''
    zone = resolve_timezone(tz)
    if moment.tzinfo is None or moment.tzinfo.utcoffset(moment) is None:
        return zone.localize(moment)
    return moment.astimezone(zone)


def report_timestamp(tz: str = "UTC", now: datetime.datetime | None = None) -> str:
    '''
    ISO-8601 timestamp for run reports; never part of a content hash.
    A naive ``now`` is read as UTC.
    '''
    moment = now if now is not None else datetime.datetime.now(pytz.utc)
    return make_timezone_aware(make_timezone_aware(moment, "UTC"), tz).isoformat()
