import logging

# Named logger for the library. Modules use children "spatialfdr.<name>".
logger = logging.getLogger("spatialfdr")
logger.propagate = False

LOG_FORMAT = "SpatialFDR: %(name)s - %(levelname)s - %(message)s"
FILE_LOG_FORMAT = "%(asctime)s.%(msecs)03d - " + LOG_FORMAT


def configure_logging(level=logging.WARNING, log_file=None):
    """
    Attach console (and optionally file) handlers to the "spatialfdr" logger.

    Calling it again replaces the handlers installed by an earlier call, so
    repeated CLI invocations inside one process do not duplicate output.
    If you do not want this default configuration, skip the call and manage
    the "spatialfdr" logger from your application code.
    """
    logger.setLevel(logging.DEBUG)  # capture all, filter via handlers

    for handler in list(logger.handlers):
        if getattr(handler, "_spatialfdr_default", False):
            logger.removeHandler(handler)
            handler.close()

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    console_handler._spatialfdr_default = True
    logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(
            logging.Formatter(FILE_LOG_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))
        file_handler._spatialfdr_default = True
        logger.addHandler(file_handler)

    return logger
