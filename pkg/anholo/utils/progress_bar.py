from tqdm import tqdm


BAR_FORMAT = "{l_bar}{bar:50}{r_bar}{bar:-50b}"


def progress_bar(data, description=None, enabled=True):
    bar = tqdm(data, bar_format=BAR_FORMAT, disable=not enabled)
    if description:
        bar.set_description(description)
    return bar

