from .defects import *
from .report import *
