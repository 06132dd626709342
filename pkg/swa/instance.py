import swa

_shared_auditor_instance = None


def shared_auditor_instance():
    """ This method will initialize _shared_auditor_instance and return it.
    The purpose of this method is to offer a single default Auditor, built from the
    stored configuration, that can be reused by multiple callers.
    """
    global _shared_auditor_instance
    if not _shared_auditor_instance:
        _shared_auditor_instance = swa.Auditor()
    return _shared_auditor_instance


def set_shared_auditor_instance(auditor_instance):
    """ This method allows us to override the default auditor for all users of
    _shared_auditor_instance.
    """
    global _shared_auditor_instance
    _shared_auditor_instance = auditor_instance
