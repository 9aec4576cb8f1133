from hereditary.commands.identify import cmd_identify
from hereditary.commands.predict import cmd_predict
from hereditary.commands.rve import cmd_rve
from hereditary.commands.spectrum import cmd_spectrum
